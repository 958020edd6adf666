#pragma once

#include <span>
#include <vector>

#include "momoc/encoding.hpp"

namespace momoc {

// Multi-shot encoding operator A(poses) = [A_0(p_0); ...; A_{S-1}(p_{S-1})].
// Shots sharing a pose share one rigid transform and one FFT per coil.
class EncodingOperator {
 public:
  EncodingOperator(const CoilSet& coils, const SamplingPlan& plan);

  const CoilSet& coils() const { return coils_; }
  const SamplingPlan& plan() const { return plan_; }
  const Dims& dims() const { return dims_; }

  std::vector<ShotSamples> forward(const ComplexVolume& x, std::span<const RigidParams> poses) const;
  ComplexVolume adjoint(const std::vector<ShotSamples>& y, std::span<const RigidParams> poses) const;

  // Forward restricted to one shot; equivalent to encode_shot.
  ShotSamples forward_shot(const ComplexVolume& x, std::size_t shot, const RigidParams& p) const;
  ComplexVolume adjoint_shot(const ShotSamples& y, std::size_t shot, const RigidParams& p) const;

 private:
  // Groups of shot indices with identical poses, in first-appearance order.
  std::vector<std::vector<std::size_t>> group_by_pose(std::span<const RigidParams> poses) const;

  const CoilSet& coils_;
  const SamplingPlan& plan_;
  Dims dims_;
};

}  // namespace momoc

#include "momoc/operator.hpp"

namespace momoc {

EncodingOperator::EncodingOperator(const CoilSet& coils, const SamplingPlan& plan)
    : coils_(coils), plan_(plan), dims_(coils.dims()) {
  check_encoding_inputs(dims_, coils_, plan_);
}

std::vector<std::vector<std::size_t>> EncodingOperator::group_by_pose(
    std::span<const RigidParams> poses) const {
  if (poses.size() != plan_.n_shots) {
    throw Error(ErrorCode::kInvalidInput, "trajectory length does not match the shot count");
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<RigidParams> keys;
  for (std::size_t s = 0; s < poses.size(); ++s) {
    if (plan_.lines_of_shot(s).empty()) continue;
    std::size_t g = 0;
    while (g < keys.size() && !(keys[g] == poses[s])) ++g;
    if (g == keys.size()) {
      keys.push_back(poses[s]);
      groups.emplace_back();
    }
    groups[g].push_back(s);
  }
  return groups;
}

std::vector<ShotSamples> EncodingOperator::forward(const ComplexVolume& x,
                                                   std::span<const RigidParams> poses) const {
  require_same_dims(x.dims(), dims_, "encoding input");
  std::vector<ShotSamples> out(plan_.n_shots);
  for (std::size_t s = 0; s < plan_.n_shots; ++s) {
    out[s] = ShotSamples(coils_.n_coils(), plan_.lines_of_shot(s).size(), dims_.nx);
  }
  ComplexVolume spectrum(dims_);
  for (const auto& group : group_by_pose(poses)) {
    const ComplexVolume posed = apply_rigid(x, poses[group.front()]);
    for (std::size_t c = 0; c < coils_.n_coils(); ++c) {
      detail::coil_spectrum(coils_.maps[c], posed, spectrum);
      for (std::size_t s : group) {
        detail::gather_unshifted(spectrum, plan_.lines_of_shot(s), out[s].coil(c));
      }
    }
  }
  return out;
}

ComplexVolume EncodingOperator::adjoint(const std::vector<ShotSamples>& y,
                                        std::span<const RigidParams> poses) const {
  if (y.size() != plan_.n_shots) {
    throw Error(ErrorCode::kInvalidInput, "sample set does not match the shot count");
  }
  ComplexVolume out(dims_);
  ComplexVolume spectrum(dims_);
  for (const auto& group : group_by_pose(poses)) {
    ComplexVolume acc(dims_);
    for (std::size_t c = 0; c < coils_.n_coils(); ++c) {
      std::fill(spectrum.begin(), spectrum.end(), cdouble{0.0, 0.0});
      for (std::size_t s : group) {
        if (y[s].n_lines != plan_.lines_of_shot(s).size() || y[s].n_coils != coils_.n_coils()) {
          throw Error(ErrorCode::kInvalidInput, "shot samples do not match the plan");
        }
        detail::scatter_unshifted(y[s].coil(c), plan_.lines_of_shot(s), spectrum);
      }
      detail::coil_backproject_accumulate(coils_.maps[c], spectrum, acc);
    }
    const ComplexVolume back = apply_rigid_adjoint(acc, poses[group.front()]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += back[i];
  }
  return out;
}

ShotSamples EncodingOperator::forward_shot(const ComplexVolume& x, std::size_t shot,
                                           const RigidParams& p) const {
  return encode_shot(x, coils_, plan_, shot, p);
}

ComplexVolume EncodingOperator::adjoint_shot(const ShotSamples& y, std::size_t shot,
                                             const RigidParams& p) const {
  return momoc::adjoint_shot(y, coils_, plan_, shot, p);
}

}  // namespace momoc

#pragma once

#include <cstddef>
#include <vector>

#include "momoc/rigid.hpp"
#include "momoc/volume.hpp"

namespace momoc {

struct RegistrationOptions {
  // Block-average downsampling factors, coarsest first. Levels whose
  // downsampled grid would fall below 8 voxels on an axis are skipped.
  std::vector<std::size_t> factors{4, 2, 1};
  double initial_trans_step = 1.0;  // voxels of the current level
  double initial_rot_step = 2.0;    // degrees
  double min_trans_step = 0.02;
  double min_rot_step = 0.05;
  std::size_t max_evaluations_per_level = 2000;
};

// Normalized cross-correlation. Throws kRegistrationUndefined when either
// volume has zero variance.
double ncc(const RealVolume& a, const RealVolume& b);

// Pose p maximizing ncc(apply_rigid(fixed, p), moving), i.e. the pose of
// `moving` relative to `fixed`.
RigidParams register_rigid(const RealVolume& moving, const RealVolume& fixed,
                           const RegistrationOptions& opts = {});

// Brings `moving` back onto the grid of the volume it was registered to.
RealVolume align_to_fixed(const RealVolume& moving, const RigidParams& pose);

// Mean over f x f x f blocks (partial blocks at the upper edges dropped).
RealVolume block_downsample(const RealVolume& vol, std::size_t factor);

}  // namespace momoc

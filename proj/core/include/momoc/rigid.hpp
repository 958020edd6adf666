#pragma once

#include <array>

#include <Eigen/Core>

#include "momoc/volume.hpp"

namespace momoc {

// Rigid pose of the object during one shot. Both vectors are indexed by
// storage axis (0 = y, 1 = z, 2 = x): rot_deg[a] is the rotation about axis a
// in degrees, trans_vox[a] the shift along axis a in voxels. The all-zero
// value is the reference pose.
struct RigidParams {
  std::array<double, 3> rot_deg{0.0, 0.0, 0.0};
  std::array<double, 3> trans_vox{0.0, 0.0, 0.0};

  bool has_rotation() const { return rot_deg != std::array<double, 3>{0.0, 0.0, 0.0}; }
  bool has_translation() const { return trans_vox != std::array<double, 3>{0.0, 0.0, 0.0}; }
  bool is_identity() const { return !has_rotation() && !has_translation(); }

  // (rot_y, rot_z, rot_x, t_y, t_z, t_x)
  std::array<double, 6> as_array() const;
  static RigidParams from_array(const std::array<double, 6>& v);

  friend bool operator==(const RigidParams&, const RigidParams&) = default;
};

void require_finite(const RigidParams& p);

enum class RotationInterpolation { kTrilinear };
enum class FftNormalization { kUnitary };

struct EncodeConfig {
  RotationInterpolation rotation_interpolation = RotationInterpolation::kTrilinear;
  FftNormalization fft_normalization = FftNormalization::kUnitary;
};

// T_p: rotate about the grid center (index floor(n/2) per axis) with the
// composition Rx*Ry*Rz, resampling trilinearly with zero fill outside the
// field of view, then translate with a k-space linear phase ramp
// (circular-shift semantics).
ComplexVolume apply_rigid(const ComplexVolume& img, const RigidParams& p);

// Exact transpose of apply_rigid: inverse phase ramp, then the transpose of
// the trilinear resampling (splatting).
ComplexVolume apply_rigid_adjoint(const ComplexVolume& img, const RigidParams& p);

// Approximate inverse: translate by -t, then resample with R^T. Used to bring
// a registered volume back onto the reference grid.
ComplexVolume apply_rigid_inverse(const ComplexVolume& img, const RigidParams& p);

// Pose q such that applying `ref` and then q moves the object like `p`
// (exact for the continuous transforms). Used to express poses relative to
// a reference shot.
RigidParams relative_pose(const RigidParams& p, const RigidParams& ref);

namespace detail {

// Angles (degrees, storage order) of a matrix built by rotation_matrix.
std::array<double, 3> rotation_angles(const Eigen::Matrix3d& rotation);

// Rotation matrix acting on storage-ordered coordinates (y, z, x).
Eigen::Matrix3d rotation_matrix(const std::array<double, 3>& rot_deg);
// d R / d rot_deg[axis], per degree.
Eigen::Matrix3d rotation_matrix_derivative(const std::array<double, 3>& rot_deg, int axis);

// Pull resampling: out(q) = img(R^T (q - c) + c).
ComplexVolume rotate(const ComplexVolume& img, const Eigen::Matrix3d& rotation);
ComplexVolume rotate_adjoint(const ComplexVolume& img, const Eigen::Matrix3d& rotation);

// Rotated volume together with its derivative with respect to each angle
// (per degree). At grid-aligned sample positions the slope is the central
// difference, matching a symmetric finite difference of the interpolant.
struct RotationJet {
  ComplexVolume value;
  std::array<ComplexVolume, 3> d_deg;
};
RotationJet rotate_with_derivatives(const ComplexVolume& img, const std::array<double, 3>& rot_deg);

// Phase ramp exp(-2*pi*i*sum_a k_a t_a / n_a) applied to an unshifted
// spectrum.
void apply_phase_ramp(ComplexVolume& spectrum, const std::array<double, 3>& trans_vox);
ComplexVolume translate(const ComplexVolume& img, const std::array<double, 3>& trans_vox);

}  // namespace detail
}  // namespace momoc

#include "momoc/rigid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "momoc/fft.hpp"

namespace momoc {

std::array<double, 6> RigidParams::as_array() const {
  return {rot_deg[0], rot_deg[1], rot_deg[2], trans_vox[0], trans_vox[1], trans_vox[2]};
}

RigidParams RigidParams::from_array(const std::array<double, 6>& v) {
  RigidParams p;
  p.rot_deg = {v[0], v[1], v[2]};
  p.trans_vox = {v[3], v[4], v[5]};
  return p;
}

void require_finite(const RigidParams& p) {
  for (double v : p.as_array()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidInput, "rigid parameters must be finite");
  }
}

namespace detail {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Storage axis order (y, z, x) from physical (x, y, z).
Eigen::Matrix3d storage_permutation() {
  Eigen::Matrix3d p;
  p << 0, 1, 0,  //
      0, 0, 1,   //
      1, 0, 0;
  return p;
}

Eigen::Matrix3d rot_x(double a) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}
Eigen::Matrix3d d_rot_x(double a) {
  Eigen::Matrix3d m;
  m << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
  return m;
}
Eigen::Matrix3d d_rot_y(double a) {
  Eigen::Matrix3d m;
  m << -std::sin(a), 0, std::cos(a), 0, 0, 0, -std::cos(a), 0, -std::sin(a);
  return m;
}
Eigen::Matrix3d d_rot_z(double a) {
  Eigen::Matrix3d m;
  m << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
  return m;
}

Eigen::Vector3d grid_center(const Dims& d) {
  return {static_cast<double>(d.ny / 2), static_cast<double>(d.nz / 2),
          static_cast<double>(d.nx / 2)};
}

// Trilinear stencil around a continuous storage-ordered position.
struct Stencil {
  std::array<long, 3> base;
  std::array<double, 3> frac;

  // Positions within 1e-9 of a grid node snap onto it so that exact
  // rotations (0, 90, 180 degrees) reproduce grid-aligned sampling.
  explicit Stencil(const Eigen::Vector3d& r) {
    constexpr double kSnap = 1e-9;
    for (int a = 0; a < 3; ++a) {
      const double fl = std::floor(r[a]);
      base[a] = static_cast<long>(fl);
      frac[a] = r[a] - fl;
      if (frac[a] < kSnap) {
        frac[a] = 0.0;
      } else if (frac[a] > 1.0 - kSnap) {
        base[a] += 1;
        frac[a] = 0.0;
      }
    }
  }
};

class ZeroPaddedSampler {
 public:
  explicit ZeroPaddedSampler(const ComplexVolume& img)
      : img_(img),
        n_{static_cast<long>(img.dims().ny), static_cast<long>(img.dims().nz),
           static_cast<long>(img.dims().nx)} {}

  cdouble at(long y, long z, long x) const {
    if (y < 0 || z < 0 || x < 0 || y >= n_[0] || z >= n_[1] || x >= n_[2]) return {0.0, 0.0};
    return img_.data()[(y * n_[1] + z) * n_[2] + x];
  }

  cdouble at(const std::array<long, 3>& i) const { return at(i[0], i[1], i[2]); }

  bool fully_outside(const Stencil& s) const {
    for (int a = 0; a < 3; ++a) {
      if (s.base[a] + 1 < -1 || s.base[a] > n_[a]) return true;
    }
    return false;
  }

  // The 8 stencil corners, indexed [dy][dz][dx].
  using Corners = std::array<cdouble, 8>;
  Corners corners(const Stencil& s) const {
    Corners c;
    const long y = s.base[0];
    const long z = s.base[1];
    const long x = s.base[2];
    if (y >= 0 && z >= 0 && x >= 0 && y + 1 < n_[0] && z + 1 < n_[1] && x + 1 < n_[2]) {
      const cdouble* p = img_.data() + (y * n_[1] + z) * n_[2] + x;
      const long sy = n_[1] * n_[2];
      const long sz = n_[2];
      c = {p[0], p[1], p[sz], p[sz + 1], p[sy], p[sy + 1], p[sy + sz], p[sy + sz + 1]};
      return c;
    }
    for (int k = 0; k < 8; ++k) c[k] = at(y + (k >> 2), z + ((k >> 1) & 1), x + (k & 1));
    return c;
  }

  static cdouble trilinear(const Stencil& s, const Corners& c) {
    const double fy = s.frac[0];
    const double fz = s.frac[1];
    const double fx = s.frac[2];
    const cdouble c00 = c[0] + fx * (c[1] - c[0]);
    const cdouble c01 = c[2] + fx * (c[3] - c[2]);
    const cdouble c10 = c[4] + fx * (c[5] - c[4]);
    const cdouble c11 = c[6] + fx * (c[7] - c[6]);
    const cdouble c0 = c00 + fz * (c01 - c00);
    const cdouble c1 = c10 + fz * (c11 - c10);
    return c0 + fy * (c1 - c0);
  }

  cdouble trilinear(const Stencil& s) const { return trilinear(s, corners(s)); }

  // Forward difference across the stencil along `axis`, bilinear in the
  // other two axes.
  static cdouble forward_difference(const Stencil& s, const Corners& c, int axis) {
    const int bit = 2 - axis;  // corner bit of this axis: y -> 4, z -> 2, x -> 1
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const int b1 = 2 - a1;
    const int b2 = 2 - a2;
    cdouble acc{0.0, 0.0};
    for (int d1 = 0; d1 < 2; ++d1) {
      const double w1 = d1 ? s.frac[a1] : 1.0 - s.frac[a1];
      for (int d2 = 0; d2 < 2; ++d2) {
        const double w2 = d2 ? s.frac[a2] : 1.0 - s.frac[a2];
        const int k = (d1 << b1) | (d2 << b2);
        acc += (w1 * w2) * (c[k | (1 << bit)] - c[k]);
      }
    }
    return acc;
  }

  // Bilinear interpolation over the two axes other than `axis`, with the
  // sample index along `axis` fixed to `index`.
  cdouble bilinear_slice(const Stencil& s, int axis, long index) const {
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    cdouble acc{0.0, 0.0};
    for (int d1 = 0; d1 < 2; ++d1) {
      const double w1 = d1 ? s.frac[a1] : 1.0 - s.frac[a1];
      for (int d2 = 0; d2 < 2; ++d2) {
        const double w2 = d2 ? s.frac[a2] : 1.0 - s.frac[a2];
        std::array<long, 3> i{};
        i[axis] = index;
        i[a1] = s.base[a1] + d1;
        i[a2] = s.base[a2] + d2;
        acc += (w1 * w2) * at(i);
      }
    }
    return acc;
  }

  cdouble partial(const Stencil& s, const Corners& c, int axis) const {
    const long b = s.base[axis];
    if (s.frac[axis] == 0.0) {
      return 0.5 * (bilinear_slice(s, axis, b + 1) - bilinear_slice(s, axis, b - 1));
    }
    return forward_difference(s, c, axis);
  }

 private:
  const ComplexVolume& img_;
  std::array<long, 3> n_;
};

template <typename Visit>
void for_each_pull_position(const Dims& d, const Eigen::Matrix3d& rotation, Visit&& visit) {
  const Eigen::Vector3d c = grid_center(d);
  const Eigen::Matrix3d inv = rotation.transpose();
  std::size_t flat = 0;
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      const Eigen::Vector3d row_start =
          inv * (Eigen::Vector3d(static_cast<double>(iy), static_cast<double>(iz), 0.0) - c) + c;
      const Eigen::Vector3d step = inv.col(2);
      for (std::size_t ix = 0; ix < d.nx; ++ix, ++flat) {
        const Eigen::Vector3d q_minus_c(static_cast<double>(iy) - c[0],
                                        static_cast<double>(iz) - c[1],
                                        static_cast<double>(ix) - c[2]);
        const Eigen::Vector3d r = row_start + static_cast<double>(ix) * step;
        visit(flat, r, q_minus_c);
      }
    }
  }
}

}  // namespace

Eigen::Matrix3d rotation_matrix(const std::array<double, 3>& rot_deg) {
  const Eigen::Matrix3d p = storage_permutation();
  const Eigen::Matrix3d phys = rot_x(rot_deg[2] * kDegToRad) * rot_y(rot_deg[0] * kDegToRad) *
                               rot_z(rot_deg[1] * kDegToRad);
  return p * phys * p.transpose();
}

std::array<double, 3> rotation_angles(const Eigen::Matrix3d& rotation) {
  const Eigen::Matrix3d p = storage_permutation();
  const Eigen::Matrix3d phys = p.transpose() * rotation * p;
  // phys = Rx(ax) * Ry(ay) * Rz(az)
  const double ay = std::asin(std::clamp(phys(0, 2), -1.0, 1.0));
  const double ax = std::atan2(-phys(1, 2), phys(2, 2));
  const double az = std::atan2(-phys(0, 1), phys(0, 0));
  return {ay / kDegToRad, az / kDegToRad, ax / kDegToRad};
}

Eigen::Matrix3d rotation_matrix_derivative(const std::array<double, 3>& rot_deg, int axis) {
  const double ay = rot_deg[0] * kDegToRad;
  const double az = rot_deg[1] * kDegToRad;
  const double ax = rot_deg[2] * kDegToRad;
  Eigen::Matrix3d phys;
  switch (axis) {
    case 0:
      phys = rot_x(ax) * d_rot_y(ay) * rot_z(az);
      break;
    case 1:
      phys = rot_x(ax) * rot_y(ay) * d_rot_z(az);
      break;
    default:
      phys = d_rot_x(ax) * rot_y(ay) * rot_z(az);
      break;
  }
  const Eigen::Matrix3d p = storage_permutation();
  return kDegToRad * (p * phys * p.transpose());
}

ComplexVolume rotate(const ComplexVolume& img, const Eigen::Matrix3d& rotation) {
  ComplexVolume out(img.dims());
  const ZeroPaddedSampler sampler(img);
  for_each_pull_position(img.dims(), rotation,
                         [&](std::size_t flat, const Eigen::Vector3d& r, const Eigen::Vector3d&) {
                           const Stencil s(r);
                           if (sampler.fully_outside(s)) return;
                           out[flat] = sampler.trilinear(s);
                         });
  return out;
}

ComplexVolume rotate_adjoint(const ComplexVolume& img, const Eigen::Matrix3d& rotation) {
  const Dims d = img.dims();
  ComplexVolume out(d);
  const std::array<long, 3> n{static_cast<long>(d.ny), static_cast<long>(d.nz),
                              static_cast<long>(d.nx)};
  for_each_pull_position(d, rotation,
                         [&](std::size_t flat, const Eigen::Vector3d& r, const Eigen::Vector3d&) {
                           const cdouble v = img[flat];
                           if (v == cdouble{0.0, 0.0}) return;
                           const Stencil s(r);
                           const long by = s.base[0];
                           const long bz = s.base[1];
                           const long bx = s.base[2];
                           if (by >= 0 && bz >= 0 && bx >= 0 && by + 1 < n[0] && bz + 1 < n[1] &&
                               bx + 1 < n[2]) {
                             const long sy = n[1] * n[2];
                             const long sz = n[2];
                             cdouble* p = out.data() + (by * n[1] + bz) * n[2] + bx;
                             const double fy = s.frac[0], fz = s.frac[1], fx = s.frac[2];
                             const cdouble v0 = (1.0 - fy) * v, v1 = fy * v;
                             const cdouble v00 = (1.0 - fz) * v0, v01 = fz * v0;
                             const cdouble v10 = (1.0 - fz) * v1, v11 = fz * v1;
                             p[0] += (1.0 - fx) * v00;
                             p[1] += fx * v00;
                             p[sz] += (1.0 - fx) * v01;
                             p[sz + 1] += fx * v01;
                             p[sy] += (1.0 - fx) * v10;
                             p[sy + 1] += fx * v10;
                             p[sy + sz] += (1.0 - fx) * v11;
                             p[sy + sz + 1] += fx * v11;
                             return;
                           }
                           for (int dy = 0; dy < 2; ++dy) {
                             const long y = s.base[0] + dy;
                             if (y < 0 || y >= n[0]) continue;
                             const double wy = dy ? s.frac[0] : 1.0 - s.frac[0];
                             for (int dz = 0; dz < 2; ++dz) {
                               const long z = s.base[1] + dz;
                               if (z < 0 || z >= n[1]) continue;
                               const double wz = dz ? s.frac[1] : 1.0 - s.frac[1];
                               for (int dx = 0; dx < 2; ++dx) {
                                 const long x = s.base[2] + dx;
                                 if (x < 0 || x >= n[2]) continue;
                                 const double wx = dx ? s.frac[2] : 1.0 - s.frac[2];
                                 out.data()[(y * n[1] + z) * n[2] + x] += (wy * wz * wx) * v;
                               }
                             }
                           }
                         });
  return out;
}

RotationJet rotate_with_derivatives(const ComplexVolume& img, const std::array<double, 3>& rot_deg) {
  const Dims d = img.dims();
  RotationJet jet{ComplexVolume(d), {ComplexVolume(d), ComplexVolume(d), ComplexVolume(d)}};
  const Eigen::Matrix3d rotation = rotation_matrix(rot_deg);
  // r = R^T (q - c) + c, so dr/dtheta_j = (dR_j)^T (q - c).
  std::array<Eigen::Matrix3d, 3> d_inv;
  for (int j = 0; j < 3; ++j) d_inv[j] = rotation_matrix_derivative(rot_deg, j).transpose();
  const ZeroPaddedSampler sampler(img);
  for_each_pull_position(
      d, rotation, [&](std::size_t flat, const Eigen::Vector3d& r, const Eigen::Vector3d& qc) {
        const Stencil s(r);
        if (sampler.fully_outside(s)) return;
        const auto corners = sampler.corners(s);
        jet.value[flat] = ZeroPaddedSampler::trilinear(s, corners);
        const std::array<cdouble, 3> grad{sampler.partial(s, corners, 0),
                                          sampler.partial(s, corners, 1),
                                          sampler.partial(s, corners, 2)};
        for (int j = 0; j < 3; ++j) {
          const Eigen::Vector3d dr = d_inv[j] * qc;
          jet.d_deg[j][flat] = grad[0] * dr[0] + grad[1] * dr[1] + grad[2] * dr[2];
        }
      });
  return jet;
}

void apply_phase_ramp(ComplexVolume& spectrum, const std::array<double, 3>& trans_vox) {
  const Dims d = spectrum.dims();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<cdouble> ry(d.ny), rz(d.nz), rx(d.nx);
  auto fill = [&](std::vector<cdouble>& ramp, std::size_t n, double t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double phase =
          -two_pi * static_cast<double>(signed_frequency(i, n)) * t / static_cast<double>(n);
      ramp[i] = std::polar(1.0, phase);
    }
  };
  fill(ry, d.ny, trans_vox[0]);
  fill(rz, d.nz, trans_vox[1]);
  fill(rx, d.nx, trans_vox[2]);
  std::size_t flat = 0;
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      const cdouble yz = ry[iy] * rz[iz];
      for (std::size_t ix = 0; ix < d.nx; ++ix, ++flat) spectrum[flat] *= yz * rx[ix];
    }
  }
}

ComplexVolume translate(const ComplexVolume& img, const std::array<double, 3>& trans_vox) {
  ComplexVolume out = img;
  if (trans_vox == std::array<double, 3>{0.0, 0.0, 0.0}) return out;
  fft3_inplace(out, false);
  apply_phase_ramp(out, trans_vox);
  fft3_inplace(out, true);
  return out;
}

}  // namespace detail

ComplexVolume apply_rigid(const ComplexVolume& img, const RigidParams& p) {
  require_finite(img.span(), "apply_rigid input");
  require_finite(p);
  if (p.is_identity()) return img;
  ComplexVolume rotated =
      p.has_rotation() ? detail::rotate(img, detail::rotation_matrix(p.rot_deg)) : img;
  return detail::translate(rotated, p.trans_vox);
}

ComplexVolume apply_rigid_adjoint(const ComplexVolume& img, const RigidParams& p) {
  require_finite(img.span(), "apply_rigid_adjoint input");
  require_finite(p);
  if (p.is_identity()) return img;
  ComplexVolume shifted =
      detail::translate(img, {-p.trans_vox[0], -p.trans_vox[1], -p.trans_vox[2]});
  if (!p.has_rotation()) return shifted;
  return detail::rotate_adjoint(shifted, detail::rotation_matrix(p.rot_deg));
}

ComplexVolume apply_rigid_inverse(const ComplexVolume& img, const RigidParams& p) {
  require_finite(img.span(), "apply_rigid_inverse input");
  require_finite(p);
  if (p.is_identity()) return img;
  ComplexVolume shifted =
      detail::translate(img, {-p.trans_vox[0], -p.trans_vox[1], -p.trans_vox[2]});
  if (!p.has_rotation()) return shifted;
  return detail::rotate(shifted, detail::rotation_matrix(p.rot_deg).transpose());
}

RigidParams relative_pose(const RigidParams& p, const RigidParams& ref) {
  // Object points move as r -> R (r - c) + c + t.
  const Eigen::Matrix3d r_ref = detail::rotation_matrix(ref.rot_deg);
  const Eigen::Matrix3d r_q = detail::rotation_matrix(p.rot_deg) * r_ref.transpose();
  const Eigen::Vector3d t_ref(ref.trans_vox[0], ref.trans_vox[1], ref.trans_vox[2]);
  const Eigen::Vector3d t_p(p.trans_vox[0], p.trans_vox[1], p.trans_vox[2]);
  const Eigen::Vector3d t_q = t_p - r_q * t_ref;
  RigidParams q;
  q.rot_deg = detail::rotation_angles(r_q);
  q.trans_vox = {t_q[0], t_q[1], t_q[2]};
  return q;
}

}  // namespace momoc

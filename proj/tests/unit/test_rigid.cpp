#include <gtest/gtest.h>

#include <numbers>

#include <Eigen/Geometry>

#include "momoc/rigid.hpp"
#include "test_util.hpp"

namespace momoc {
namespace {

using testing::gaussian_blob;
using testing::max_abs_diff;
using testing::random_complex;
using testing::rel_error;

RigidParams pose(std::array<double, 3> rot, std::array<double, 3> trans) {
  RigidParams p;
  p.rot_deg = rot;
  p.trans_vox = trans;
  return p;
}

TEST(Rigid, ZeroParamsIsExactIdentity) {
  const auto v = random_complex(Dims{9, 8, 7}, 1);
  EXPECT_EQ(apply_rigid(v, RigidParams{}), v);
  EXPECT_EQ(apply_rigid_adjoint(v, RigidParams{}), v);
}

TEST(Rigid, IntegerTranslationIsCircularShift) {
  const Dims d{8, 10, 16};
  const auto v = random_complex(d, 2);
  const auto out = apply_rigid(v, pose({0, 0, 0}, {0, 0, 5}));
  ComplexVolume oracle(d);
  for (std::size_t y = 0; y < d.ny; ++y)
    for (std::size_t z = 0; z < d.nz; ++z)
      for (std::size_t x = 0; x < d.nx; ++x) oracle.at(y, z, (x + 5) % d.nx) = v.at(y, z, x);
  EXPECT_LE(max_abs_diff(out, oracle), 1e-5);
}

TEST(Rigid, TranslationsCompose) {
  const auto v = random_complex(Dims{12, 9, 10}, 3);
  const auto a = apply_rigid(apply_rigid(v, pose({}, {0.3, -1.7, 2.2})), pose({}, {1.1, 0.4, -0.6}));
  const auto b = apply_rigid(v, pose({}, {1.4, -1.3, 1.6}));
  EXPECT_LT(rel_error(a, b), 1e-6);
}

TEST(Rigid, HalfTurnTwiceRestoresSmoothPhantom) {
  const Dims d{32, 32, 32};
  const auto v = gaussian_blob(d, 4.0);
  const auto p = pose({0, 0, 180}, {});
  EXPECT_LT(rel_error(apply_rigid(apply_rigid(v, p), p), v), 2e-2);
}

TEST(Rigid, QuarterTurnPermutesGrid) {
  // Rotation by 90 degrees about x maps grid points onto grid points, so the
  // interior must match an index permutation exactly.
  const Dims d{9, 9, 4};
  const auto v = random_complex(d, 4);
  const auto out = apply_rigid(v, pose({0, 0, 90}, {}));
  const Eigen::Matrix3d r = detail::rotation_matrix({0, 0, 90});
  std::size_t checked = 0;
  for (std::size_t y = 0; y < d.ny; ++y)
    for (std::size_t z = 0; z < d.nz; ++z)
      for (std::size_t x = 0; x < d.nx; ++x) {
        const Eigen::Vector3d q(double(y) - 4, double(z) - 4, double(x) - 2);
        const Eigen::Vector3d src = r.transpose() * q;
        const long sy = std::lround(src[0] + 4), sz = std::lround(src[1] + 4), sx = std::lround(src[2] + 2);
        ASSERT_TRUE(sy >= 0 && sy < 9 && sz >= 0 && sz < 9 && sx >= 0 && sx < 4);
        EXPECT_LT(std::abs(out.at(y, z, x) - v.at(sy, sz, sx)), 1e-12);
        ++checked;
      }
  EXPECT_EQ(checked, d.size());
}

TEST(Rigid, AdjointIsExactTranspose) {
  const Dims d{12, 10, 14};
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto x = random_complex(d, 10 + s);
    const auto y = random_complex(d, 20 + s);
    const auto p = pose({3.0 + s, -7.5, 11.0 * s}, {0.4, -1.2, 2.5});
    const cdouble lhs = dot(apply_rigid(x, p).span(), y.span());
    const cdouble rhs = dot(x.span(), apply_rigid_adjoint(y, p).span());
    EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-10);
  }
}

TEST(Rigid, InverseUndoesSmallMotion) {
  const Dims d{32, 32, 32};
  const auto v = gaussian_blob(d, 5.0);
  const auto p = pose({2.0, -3.0, 4.0}, {1.5, -0.5, 2.0});
  EXPECT_LT(rel_error(apply_rigid_inverse(apply_rigid(v, p), p), v), 2e-2);
}

TEST(Rigid, RotationMatrixIsRxRyRzInPhysicalAxes) {
  // Physical axes (x, y, z) map to storage positions (2, 0, 1).
  const double a = 0.3, b = -0.5, c = 0.7;
  auto rx = Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
  auto ry = Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()).toRotationMatrix();
  auto rz = Eigen::AngleAxisd(c, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d phys = rx * ry * rz;
  Eigen::Matrix3d perm = Eigen::Matrix3d::Zero();  // storage <- physical
  perm(0, 1) = 1;
  perm(1, 2) = 1;
  perm(2, 0) = 1;
  const double deg = 180.0 / std::numbers::pi;
  const Eigen::Matrix3d r = detail::rotation_matrix({b * deg, c * deg, a * deg});
  EXPECT_LT((r - perm * phys * perm.transpose()).norm(), 1e-12);
}

TEST(Rigid, RotationAnglesInvertMatrix) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-80, 80);
  for (int i = 0; i < 50; ++i) {
    const std::array<double, 3> ang{u(rng), u(rng), u(rng)};
    const auto back = detail::rotation_angles(detail::rotation_matrix(ang));
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(back[k], ang[k], 1e-9);
  }
}

TEST(Rigid, RelativePoseComposes) {
  const auto p = pose({4, -2, 7}, {1, 2, -3});
  const auto ref = pose({-1, 3, 2}, {0.5, -1, 0.25});
  const auto q = relative_pose(p, ref);
  const Eigen::Matrix3d rq = detail::rotation_matrix(q.rot_deg);
  EXPECT_LT((rq * detail::rotation_matrix(ref.rot_deg) - detail::rotation_matrix(p.rot_deg)).norm(), 1e-12);
  EXPECT_EQ(relative_pose(p, RigidParams{}), p);
  const auto self = relative_pose(p, p);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(self.rot_deg[k], 0.0, 1e-9);
    EXPECT_NEAR(self.trans_vox[k], 0.0, 1e-9);
  }
}

TEST(Rigid, JetMatchesFiniteDifferences) {
  const Dims d{16, 16, 16};
  const auto v = gaussian_blob(d, 3.0);
  const std::array<double, 3> ang{3.3, -2.1, 5.7};
  const auto jet = detail::rotate_with_derivatives(v, ang);
  EXPECT_LT(rel_error(jet.value, detail::rotate(v, detail::rotation_matrix(ang))), 1e-12);
  const double h = 1e-3;
  for (int a = 0; a < 3; ++a) {
    auto plus = ang, minus = ang;
    plus[a] += h;
    minus[a] -= h;
    const auto fp = detail::rotate(v, detail::rotation_matrix(plus));
    const auto fm = detail::rotate(v, detail::rotation_matrix(minus));
    ComplexVolume fd(d);
    for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (fp[i] - fm[i]) / (2 * h);
    EXPECT_LT(rel_error(jet.d_deg[a], fd), 1e-3) << "axis " << a;
  }
}

TEST(Rigid, RejectsNonFiniteParams) {
  const auto v = random_complex(Dims{4, 4, 4}, 1);
  EXPECT_THROW(apply_rigid(v, pose({std::nan(""), 0, 0}, {})), Error);
}

TEST(Rigid, ArrayRoundTrip) {
  const auto p = pose({1, 2, 3}, {4, 5, 6});
  EXPECT_EQ(RigidParams::from_array(p.as_array()), p);
  EXPECT_EQ(p.as_array()[0], 1.0);
  EXPECT_EQ(p.as_array()[5], 6.0);
}

}  // namespace
}  // namespace momoc

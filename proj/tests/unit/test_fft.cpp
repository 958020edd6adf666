#include <gtest/gtest.h>

#include <limits>

#include "momoc/fft.hpp"
#include "test_util.hpp"

namespace momoc {
namespace {

using testing::random_complex;
using testing::rel_error;

TEST(Fft, CenterImpulseHasFlatSpectrum) {
  const Dims d{8, 6, 10};
  ComplexVolume v(d);
  v.at(d.ny / 2, d.nz / 2, d.nx / 2) = 1.0;
  const auto k = fft3_centered(v);
  const double expected = 1.0 / std::sqrt(double(d.size()));
  for (const auto& z : k) {
    EXPECT_NEAR(z.real(), expected, 1e-12);
    EXPECT_NEAR(z.imag(), 0.0, 1e-12);
  }
}

TEST(Fft, InverseRoundTripOddAndEvenDims) {
  for (const Dims d : {Dims{16, 16, 16}, Dims{7, 9, 5}, Dims{12, 5, 8}}) {
    const auto v = random_complex(d, 11);
    EXPECT_LT(rel_error(ifft3_centered(fft3_centered(v)), v), 1e-6) << to_string(d);
  }
}

TEST(Fft, ParsevalOnRandomVolumes) {
  for (const Dims d : {Dims{16, 16, 16}, Dims{3, 17, 6}, Dims{64, 8, 2}}) {
    const auto v = random_complex(d, 5);
    const double e0 = norm2(v.span());
    const double e1 = norm2(fft3_centered(v).span());
    EXPECT_NEAR(e1 / e0, 1.0, 1e-6) << to_string(d);
  }
}

TEST(Fft, DcLandsAtFloorHalf) {
  const Dims d{5, 4, 7};
  const ComplexVolume ones(d, 1.0);
  const auto k = fft3_centered(ones);
  EXPECT_NEAR(std::abs(k.at(2, 2, 3)), std::sqrt(double(d.size())), 1e-9);
  EXPECT_NEAR(norm2(k.span()), std::abs(k.at(2, 2, 3)), 1e-9);
}

TEST(Fft, RejectsNonFiniteInput) {
  ComplexVolume v(Dims{4, 4, 4});
  v[3] = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  EXPECT_THROW(fft3_centered(v), Error);
}

TEST(Fft, ShiftsAreInverseOnOddDims) {
  const auto v = random_complex(Dims{5, 7, 3}, 2);
  auto w = v;
  detail::fftshift(w);
  detail::ifftshift(w);
  EXPECT_EQ(w, v);
}

TEST(Fft, RepeatedTransformsAreBitwiseIdentical) {
  const auto v = random_complex(Dims{16, 12, 20}, 9);
  EXPECT_EQ(fft3_centered(v), fft3_centered(v));
}

}  // namespace
}  // namespace momoc

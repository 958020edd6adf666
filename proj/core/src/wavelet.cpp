#include "momoc/wavelet.hpp"

#include <cmath>
#include <numbers>

namespace momoc {
namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

Dims padded(const Dims& d) { return {d.ny + d.ny % 2, d.nz + d.nz % 2, d.nx + d.nx % 2}; }

// One Haar analysis (or synthesis) pass along `axis`, approximation band in
// the first half, detail band in the second half.
void haar_pass(ComplexVolume& v, int axis, bool inverse) {
  const Dims d = v.dims();
  const std::size_t n = d[static_cast<std::size_t>(axis)];
  const std::size_t half = n / 2;
  const std::size_t stride = axis == 0 ? d.nz * d.nx : (axis == 1 ? d.nx : 1);
  std::vector<cdouble> line(n);
  const std::size_t outer0 = axis == 0 ? 1 : d.ny;
  const std::size_t outer1 = axis == 1 ? 1 : d.nz;
  const std::size_t outer2 = axis == 2 ? 1 : d.nx;
  for (std::size_t a = 0; a < outer0; ++a) {
    for (std::size_t b = 0; b < outer1; ++b) {
      for (std::size_t c = 0; c < outer2; ++c) {
        cdouble* base = v.data() + d.index(a, b, c);
        for (std::size_t i = 0; i < n; ++i) line[i] = base[i * stride];
        if (!inverse) {
          for (std::size_t i = 0; i < half; ++i) {
            base[i * stride] = (line[2 * i] + line[2 * i + 1]) * kInvSqrt2;
            base[(half + i) * stride] = (line[2 * i] - line[2 * i + 1]) * kInvSqrt2;
          }
        } else {
          for (std::size_t i = 0; i < half; ++i) {
            base[2 * i * stride] = (line[i] + line[half + i]) * kInvSqrt2;
            base[(2 * i + 1) * stride] = (line[i] - line[half + i]) * kInvSqrt2;
          }
        }
      }
    }
  }
}

}  // namespace

ComplexVolume haar3_forward(const ComplexVolume& img) {
  const Dims d = img.dims();
  const Dims p = padded(d);
  ComplexVolume out(p);
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      std::copy_n(img.data() + d.index(iy, iz, 0), d.nx, out.data() + p.index(iy, iz, 0));
    }
  }
  for (int axis = 2; axis >= 0; --axis) haar_pass(out, axis, false);
  return out;
}

ComplexVolume haar3_adjoint(const ComplexVolume& coeffs, const Dims& image_dims) {
  const Dims p = coeffs.dims();
  if (!(p == padded(image_dims))) {
    throw Error(ErrorCode::kInvalidInput, "Haar coefficients do not match the image grid");
  }
  ComplexVolume work = coeffs;
  for (int axis = 0; axis < 3; ++axis) haar_pass(work, axis, true);
  ComplexVolume out(image_dims);
  for (std::size_t iy = 0; iy < image_dims.ny; ++iy) {
    for (std::size_t iz = 0; iz < image_dims.nz; ++iz) {
      std::copy_n(work.data() + p.index(iy, iz, 0), image_dims.nx,
                  out.data() + image_dims.index(iy, iz, 0));
    }
  }
  return out;
}

WaveletL1 wavelet_l1(const ComplexVolume& img) {
  ComplexVolume coeffs = haar3_forward(img);
  WaveletL1 result;
  auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  for (auto& c : coeffs) {
    result.value += std::abs(c.real()) + std::abs(c.imag());
    c = {sign(c.real()), sign(c.imag())};
  }
  result.subgradient = haar3_adjoint(coeffs, img.dims());
  return result;
}

}  // namespace momoc

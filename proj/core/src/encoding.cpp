#include "momoc/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "momoc/fft.hpp"

namespace momoc {
namespace detail {
namespace {

// Unshifted index of centered index k on an axis of length n.
inline std::size_t unshift(std::size_t k, std::size_t n) { return (k + n - n / 2) % n; }

}  // namespace

void coil_spectrum(const ComplexVolume& coil_map, const ComplexVolume& img,
                   ComplexVolume& spectrum) {
  const Dims d = img.dims();
  if (!(spectrum.dims() == d)) spectrum = ComplexVolume(d);
  // ifftshift fused with the coil weighting: spectrum[j] = (S.*x)[(j + n/2) % n].
  for (std::size_t jy = 0; jy < d.ny; ++jy) {
    const std::size_t iy = (jy + d.ny / 2) % d.ny;
    for (std::size_t jz = 0; jz < d.nz; ++jz) {
      const std::size_t iz = (jz + d.nz / 2) % d.nz;
      const cdouble* s = coil_map.data() + d.index(iy, iz, 0);
      const cdouble* x = img.data() + d.index(iy, iz, 0);
      cdouble* out = spectrum.data() + d.index(jy, jz, 0);
      const std::size_t h = d.nx / 2;
      const std::size_t tail = d.nx - h;
      for (std::size_t jx = 0; jx < tail; ++jx) out[jx] = s[jx + h] * x[jx + h];
      for (std::size_t jx = tail; jx < d.nx; ++jx) out[jx] = s[jx - tail] * x[jx - tail];
    }
  }
  fft3_inplace(spectrum, false);
}

void gather_unshifted(const ComplexVolume& spectrum, std::span<const LineIndex> lines,
                      std::span<cdouble> out) {
  const Dims d = spectrum.dims();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const std::size_t uy = unshift(lines[l] / d.nz, d.ny);
    const std::size_t uz = unshift(lines[l] % d.nz, d.nz);
    const cdouble* row = spectrum.data() + d.index(uy, uz, 0);
    cdouble* dst = out.data() + l * d.nx;
    // Centered kx maps to unshifted (kx + nx - nx/2) % nx.
    const std::size_t h = d.nx / 2;
    std::copy(row + (d.nx - h), row + d.nx, dst);
    std::copy(row, row + (d.nx - h), dst + h);
  }
}

void scatter_unshifted(std::span<const cdouble> in, std::span<const LineIndex> lines,
                       ComplexVolume& spectrum) {
  const Dims d = spectrum.dims();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const std::size_t uy = unshift(lines[l] / d.nz, d.ny);
    const std::size_t uz = unshift(lines[l] % d.nz, d.nz);
    cdouble* row = spectrum.data() + d.index(uy, uz, 0);
    const cdouble* src = in.data() + l * d.nx;
    const std::size_t h = d.nx / 2;
    for (std::size_t kx = 0; kx < h; ++kx) row[kx + d.nx - h] += src[kx];
    for (std::size_t kx = h; kx < d.nx; ++kx) row[kx - h] += src[kx];
  }
}

void coil_backproject_accumulate(const ComplexVolume& coil_map, ComplexVolume& spectrum,
                                 ComplexVolume& acc) {
  const Dims d = spectrum.dims();
  fft3_inplace(spectrum, true);
  // fftshift fused with conj(S) weighting: image[i] = spectrum[(i + n - n/2) % n].
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    const std::size_t jy = unshift(iy, d.ny);
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      const std::size_t jz = unshift(iz, d.nz);
      const cdouble* src = spectrum.data() + d.index(jy, jz, 0);
      const cdouble* s = coil_map.data() + d.index(iy, iz, 0);
      cdouble* dst = acc.data() + d.index(iy, iz, 0);
      const std::size_t h = d.nx / 2;
      for (std::size_t ix = 0; ix < h; ++ix) dst[ix] += std::conj(s[ix]) * src[ix + d.nx - h];
      for (std::size_t ix = h; ix < d.nx; ++ix) dst[ix] += std::conj(s[ix]) * src[ix - h];
    }
  }
}

}  // namespace detail

void check_encoding_inputs(const Dims& img, const CoilSet& coils, const SamplingPlan& plan) {
  coils.validate();
  require_same_dims(coils.dims(), img, "coil maps vs image");
  if (plan.ny != img.ny || plan.nz != img.nz) {
    throw Error(ErrorCode::kInvalidInput, "sampling plan grid does not match image " +
                                              to_string(img));
  }
}

ShotSamples encode_shot(const ComplexVolume& img, const CoilSet& coils, const SamplingPlan& plan,
                        std::size_t shot, const RigidParams& p) {
  check_encoding_inputs(img.dims(), coils, plan);
  if (shot >= plan.n_shots) throw Error(ErrorCode::kInvalidInput, "shot index out of range");
  const auto& lines = plan.lines_of_shot(shot);
  ShotSamples out(coils.n_coils(), lines.size(), img.dims().nx);
  const ComplexVolume posed = apply_rigid(img, p);
  ComplexVolume spectrum(img.dims());
  for (std::size_t c = 0; c < coils.n_coils(); ++c) {
    detail::coil_spectrum(coils.maps[c], posed, spectrum);
    detail::gather_unshifted(spectrum, lines, out.coil(c));
  }
  return out;
}

ComplexVolume adjoint_shot(const ShotSamples& samples, const CoilSet& coils,
                           const SamplingPlan& plan, std::size_t shot, const RigidParams& p) {
  coils.validate();
  if (shot >= plan.n_shots) throw Error(ErrorCode::kInvalidInput, "shot index out of range");
  const Dims d = coils.dims();
  const auto& lines = plan.lines_of_shot(shot);
  if (samples.n_coils != coils.n_coils() || samples.n_lines != lines.size() ||
      samples.nx != d.nx || samples.data.size() != samples.n_coils * samples.n_lines * d.nx) {
    throw Error(ErrorCode::kInvalidInput, "shot samples do not match the plan and coil set");
  }
  require_finite(samples.data, "adjoint_shot samples");
  ComplexVolume acc(d);
  ComplexVolume spectrum(d);
  for (std::size_t c = 0; c < coils.n_coils(); ++c) {
    std::fill(spectrum.begin(), spectrum.end(), cdouble{0.0, 0.0});
    detail::scatter_unshifted(samples.coil(c), lines, spectrum);
    detail::coil_backproject_accumulate(coils.maps[c], spectrum, acc);
  }
  return apply_rigid_adjoint(acc, p);
}

CoilSet make_coil_maps(const Dims& dims, std::size_t n_coils) {
  if (n_coils == 0) throw Error(ErrorCode::kInvalidInput, "n_coils must be >= 1");
  if (n_coils == 1) return unit_coil(dims);
  CoilSet coils;
  const double cy = static_cast<double>(dims.ny / 2);
  const double cz = static_cast<double>(dims.nz / 2);
  const double cx = static_cast<double>(dims.nx / 2);
  const double extent = static_cast<double>(std::max({dims.ny, dims.nz, dims.nx}));
  const double radius = 0.75 * extent;
  const double sigma = 0.6 * extent;
  for (std::size_t c = 0; c < n_coils; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_coils);
    const double py = cy + radius * std::cos(angle);
    const double pz = cz + radius * std::sin(angle);
    ComplexVolume map(dims);
    for (std::size_t iy = 0; iy < dims.ny; ++iy) {
      for (std::size_t iz = 0; iz < dims.nz; ++iz) {
        for (std::size_t ix = 0; ix < dims.nx; ++ix) {
          const double dy = static_cast<double>(iy) - py;
          const double dz = static_cast<double>(iz) - pz;
          const double dx = static_cast<double>(ix) - cx;
          const double mag = std::exp(-(dy * dy + dz * dz + dx * dx) / (2.0 * sigma * sigma));
          const double phase = angle + std::numbers::pi * (dy + dz) / (4.0 * extent);
          map.at(iy, iz, ix) = std::polar(mag, phase);
        }
      }
    }
    coils.maps.push_back(std::move(map));
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    double ss = 0.0;
    for (const auto& m : coils.maps) ss += std::norm(m[i]);
    const double inv = 1.0 / std::sqrt(ss);
    for (auto& m : coils.maps) m[i] *= inv;
  }
  return coils;
}

CoilSet unit_coil(const Dims& dims) {
  CoilSet coils;
  coils.maps.emplace_back(dims, cdouble{1.0, 0.0});
  return coils;
}

void gather_lines(const ComplexVolume& kspace, std::span<const LineIndex> lines,
                  std::span<cdouble> out) {
  const Dims d = kspace.dims();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const cdouble* row = kspace.data() + lines[l] * d.nx;
    std::copy(row, row + d.nx, out.data() + l * d.nx);
  }
}

void scatter_lines(std::span<const cdouble> in, std::span<const LineIndex> lines,
                   ComplexVolume& kspace) {
  const Dims d = kspace.dims();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    std::copy(in.data() + l * d.nx, in.data() + (l + 1) * d.nx,
              kspace.data() + lines[l] * d.nx);
  }
}

std::vector<ShotSamples> split_by_shot(const MultiCoilKSpace& ksp, const SamplingPlan& plan) {
  if (ksp.empty()) throw Error(ErrorCode::kInvalidInput, "k-space has no coils");
  const Dims d = ksp.front().dims();
  if (plan.ny != d.ny || plan.nz != d.nz) {
    throw Error(ErrorCode::kInvalidInput, "k-space grid does not match the sampling plan");
  }
  std::vector<ShotSamples> out;
  out.reserve(plan.n_shots);
  for (std::size_t s = 0; s < plan.n_shots; ++s) {
    const auto& lines = plan.lines_of_shot(s);
    ShotSamples shot(ksp.size(), lines.size(), d.nx);
    for (std::size_t c = 0; c < ksp.size(); ++c) {
      require_same_dims(ksp[c].dims(), d, "k-space coils");
      gather_lines(ksp[c], lines, shot.coil(c));
    }
    out.push_back(std::move(shot));
  }
  return out;
}

}  // namespace momoc

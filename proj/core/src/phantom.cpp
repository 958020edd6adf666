#include "momoc/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace momoc {
namespace {

// Modified 3D Shepp-Logan: intensity, semi-axes (a, b, c), centre (x0, y0, z0)
// and in-plane angle phi in degrees.
struct Ellipsoid {
  double intensity;
  double a, b, c;
  double x0, y0, z0;
  double phi_deg;
};

constexpr std::array<Ellipsoid, 10> kShepp{{
    {1.0, 0.6900, 0.920, 0.810, 0.0, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.780, 0.0, -0.0184, 0.0, 0.0},
    {-0.2, 0.1100, 0.310, 0.220, 0.22, 0.0, 0.0, -18.0},
    {-0.2, 0.1600, 0.410, 0.280, -0.22, 0.0, 0.0, 18.0},
    {0.1, 0.2100, 0.250, 0.410, 0.0, 0.35, -0.15, 0.0},
    {0.1, 0.0460, 0.046, 0.050, 0.0, 0.1, 0.25, 0.0},
    {0.1, 0.0460, 0.046, 0.050, 0.0, -0.1, 0.25, 0.0},
    {0.1, 0.0460, 0.023, 0.050, -0.08, -0.605, 0.0, 0.0},
    {0.1, 0.0230, 0.023, 0.020, 0.0, -0.606, 0.0, 0.0},
    {0.1, 0.0230, 0.046, 0.020, 0.06, -0.605, 0.0, 0.0},
}};

// Normalized coordinate in [-1, 1) along an axis.
double normalized(std::size_t i, std::size_t n) {
  return (static_cast<double>(i) - static_cast<double>(n / 2)) / (static_cast<double>(n) / 2.0);
}

RealVolume shepp3d(const Dims& d) {
  RealVolume out(d);
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    const double y = normalized(iy, d.ny);
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      const double z = normalized(iz, d.nz);
      for (std::size_t ix = 0; ix < d.nx; ++ix) {
        const double x = normalized(ix, d.nx);
        double v = 0.0;
        for (const auto& e : kShepp) {
          const double phi = e.phi_deg * std::numbers::pi / 180.0;
          const double dx = x - e.x0;
          const double dy = y - e.y0;
          const double rx = std::cos(phi) * dx + std::sin(phi) * dy;
          const double ry = -std::sin(phi) * dx + std::cos(phi) * dy;
          const double rz = z - e.z0;
          const double q = (rx * rx) / (e.a * e.a) + (ry * ry) / (e.b * e.b) + (rz * rz) / (e.c * e.c);
          if (q <= 1.0) v += e.intensity;
        }
        out.at(iy, iz, ix) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

RealVolume blobs(const Dims& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-0.5, 0.5);
  std::uniform_real_distribution<double> amp(0.2, 0.7);
  std::uniform_real_distribution<double> width(0.06, 0.16);
  struct Blob {
    double y, z, x, amplitude, sigma;
  };
  std::vector<Blob> list(12);
  for (auto& b : list) b = {pos(rng), pos(rng), pos(rng), amp(rng), width(rng)};

  RealVolume out(d);
  double peak = 0.0;
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    const double y = normalized(iy, d.ny);
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      const double z = normalized(iz, d.nz);
      for (std::size_t ix = 0; ix < d.nx; ++ix) {
        const double x = normalized(ix, d.nx);
        const double r2 = (y * y) / (0.8 * 0.8) + (z * z) / (0.75 * 0.75) + (x * x) / (0.7 * 0.7);
        if (r2 >= 1.0) continue;
        // Head: flat tissue level with a soft rim, blobs add structure.
        double v = 0.3 * std::min(1.0, 8.0 * (1.0 - r2));
        for (const auto& b : list) {
          const double dd = (y - b.y) * (y - b.y) + (z - b.z) * (z - b.z) + (x - b.x) * (x - b.x);
          v += b.amplitude * std::exp(-dd / (2.0 * b.sigma * b.sigma));
        }
        out.at(iy, iz, ix) = v;
        peak = std::max(peak, v);
      }
    }
  }
  if (peak > 0.0) {
    for (auto& v : out) v /= peak;
  }
  return out;
}

}  // namespace

PhantomKind phantom_kind_from_name(std::string_view name) {
  if (name == "shepp3d") return PhantomKind::kShepp3d;
  if (name == "blobs") return PhantomKind::kBlobs;
  throw Error(ErrorCode::kInvalidInput, "unknown phantom kind '" + std::string(name) + "'");
}

RealVolume make_phantom(PhantomKind kind, const Dims& dims, std::uint64_t seed) {
  if (dims.ny < 16 || dims.nz < 16 || dims.nx < 16) {
    throw Error(ErrorCode::kInvalidInput, "phantom dims must be at least 16 per axis, got " +
                                              to_string(dims));
  }
  return kind == PhantomKind::kShepp3d ? shepp3d(dims) : blobs(dims, seed);
}

}  // namespace momoc

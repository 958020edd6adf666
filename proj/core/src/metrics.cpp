#include "momoc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace momoc {
namespace {

void require_pair(const RealVolume& x, const RealVolume& ref, const char* what) {
  require_same_dims(x.dims(), ref.dims(), what);
  require_finite(x.span(), what);
  require_finite(ref.span(), what);
}

bool in_mask(const RealVolume* mask, std::size_t i) { return mask == nullptr || (*mask)[i] != 0.0; }

// Summed-volume table with a zero border for O(1) box sums.
class IntegralVolume {
 public:
  template <typename F>
  IntegralVolume(const Dims& d, F&& value) : d_(d), table_((d.ny + 1) * (d.nz + 1) * (d.nx + 1)) {
    for (std::size_t iy = 0; iy < d.ny; ++iy) {
      for (std::size_t iz = 0; iz < d.nz; ++iz) {
        for (std::size_t ix = 0; ix < d.nx; ++ix) {
          const double v = value(d.index(iy, iz, ix));
          at(iy + 1, iz + 1, ix + 1) = v + at(iy, iz + 1, ix + 1) + at(iy + 1, iz, ix + 1) +
                                       at(iy + 1, iz + 1, ix) - at(iy, iz, ix + 1) -
                                       at(iy, iz + 1, ix) - at(iy + 1, iz, ix) + at(iy, iz, ix);
        }
      }
    }
  }

  // Sum over the inclusive box [lo, hi].
  double box(const std::array<std::size_t, 3>& lo, const std::array<std::size_t, 3>& hi) const {
    const std::size_t y0 = lo[0], z0 = lo[1], x0 = lo[2];
    const std::size_t y1 = hi[0] + 1, z1 = hi[1] + 1, x1 = hi[2] + 1;
    return at(y1, z1, x1) - at(y0, z1, x1) - at(y1, z0, x1) - at(y1, z1, x0) + at(y0, z0, x1) +
           at(y0, z1, x0) + at(y1, z0, x0) - at(y0, z0, x0);
  }

 private:
  double& at(std::size_t y, std::size_t z, std::size_t x) {
    return table_[(y * (d_.nz + 1) + z) * (d_.nx + 1) + x];
  }
  double at(std::size_t y, std::size_t z, std::size_t x) const {
    return table_[(y * (d_.nz + 1) + z) * (d_.nx + 1) + x];
  }

  Dims d_;
  std::vector<double> table_;
};

constexpr std::array<double, 3> kSmooth{1.0, 2.0, 1.0};
constexpr std::array<double, 3> kDerivative{-1.0, 0.0, 1.0};

// 3D Sobel response along `axis` at an interior voxel.
double sobel3(const RealVolume& v, std::size_t iy, std::size_t iz, std::size_t ix, int axis) {
  // Central difference along `axis` first, then [1,2,1] smoothing on the
  // other two axes, so flat regions give exactly zero.
  double acc = 0.0;
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      std::array<std::size_t, 3> lo{iy, iz, ix}, hi{iy, iz, ix};
      int other = 0;
      for (int k = 0; k < 3; ++k) {
        if (k == axis) {
          lo[k] -= 1;
          hi[k] += 1;
        } else {
          const int off = other++ == 0 ? a : b;
          lo[k] += off;
          hi[k] += off;
        }
      }
      const double w = kSmooth[static_cast<std::size_t>(a + 1)] * kSmooth[static_cast<std::size_t>(b + 1)];
      acc += w * (v.at(hi[0], hi[1], hi[2]) - v.at(lo[0], lo[1], lo[2]));
    }
  }
  return acc;
}

}  // namespace

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kInvalidInput, "percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw Error(ErrorCode::kInvalidInput, "percentile out of range");
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<long>(lo), values.end());
  const double v_lo = values[lo];
  double v_hi = v_lo;
  if (hi != lo) v_hi = *std::min_element(values.begin() + static_cast<long>(lo) + 1, values.end());
  return v_lo + (pos - static_cast<double>(lo)) * (v_hi - v_lo);
}

std::pair<RealVolume, RealVolume> preprocess_pair(const RealVolume& recon, const RealVolume& ref,
                                                  const RealVolume& mask,
                                                  const PreprocessOptions& opts) {
  require_pair(recon, ref, "preprocess_pair");
  require_same_dims(mask.dims(), ref.dims(), "preprocess_pair mask");
  require_binary(mask, "brain mask");
  std::vector<double> in_recon;
  std::vector<double> in_ref;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0) {
      in_recon.push_back(recon[i]);
      in_ref.push_back(ref[i]);
    }
  }
  if (in_ref.empty()) throw Error(ErrorCode::kInvalidInput, "brain mask is empty");
  const double p_ref = percentile(in_ref, opts.percentile);
  const double p_recon =
      opts.share_reference_percentile ? p_ref : percentile(std::move(in_recon), opts.percentile);
  auto apply = [&](const RealVolume& v, double scale) {
    RealVolume out(v.dims());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (mask[i] == 0.0) continue;
      const double s = scale > 0.0 ? v[i] / scale : v[i];
      out[i] = std::min(s, 1.0);
    }
    return out;
  };
  return {apply(recon, p_recon), apply(ref, p_ref)};
}

RealVolume normalize_percentile(const RealVolume& vol, double q) {
  require_finite(vol.span(), "normalize_percentile");
  const double p = percentile({vol.begin(), vol.end()}, q);
  RealVolume out(vol.dims());
  for (std::size_t i = 0; i < vol.size(); ++i) {
    out[i] = std::min(p > 0.0 ? vol[i] / p : vol[i], 1.0);
  }
  return out;
}

double psnr(const RealVolume& x, const RealVolume& ref, const RealVolume* mask) {
  require_pair(x, ref, "psnr");
  if (mask) require_same_dims(mask->dims(), x.dims(), "psnr mask");
  double se = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!in_mask(mask, i)) continue;
    const double d = x[i] - ref[i];
    se += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kInvalidInput, "psnr over an empty mask");
  const double mse = se / static_cast<double>(n);
  if (mse < 1e-10) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const RealVolume& x, const RealVolume& ref, const RealVolume* mask,
            const SsimOptions& opts) {
  require_pair(x, ref, "ssim");
  if (mask) require_same_dims(mask->dims(), x.dims(), "ssim mask");
  if (opts.window == 0 || opts.window % 2 == 0) {
    throw Error(ErrorCode::kInvalidInput, "ssim window must be odd");
  }
  const Dims d = x.dims();
  const std::size_t r = opts.window / 2;
  const std::array<std::size_t, 3> radius{r, r, opts.slice_wise ? 0 : r};
  for (std::size_t a = 0; a < 3; ++a) {
    if (d[a] < 2 * radius[a] + 1) {
      throw Error(ErrorCode::kInvalidInput, "volume smaller than the SSIM window");
    }
  }
  // Moments are accumulated around the global means to limit cancellation in
  // E[x^2] - E[x]^2.
  const double ox = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double oy = std::accumulate(ref.begin(), ref.end(), 0.0) / static_cast<double>(ref.size());
  const IntegralVolume sx(d, [&](std::size_t i) { return x[i] - ox; });
  const IntegralVolume sy(d, [&](std::size_t i) { return ref[i] - oy; });
  const IntegralVolume sxx(d, [&](std::size_t i) { return (x[i] - ox) * (x[i] - ox); });
  const IntegralVolume syy(d, [&](std::size_t i) { return (ref[i] - oy) * (ref[i] - oy); });
  const IntegralVolume sxy(d, [&](std::size_t i) { return (x[i] - ox) * (ref[i] - oy); });

  const double n = static_cast<double>((2 * radius[0] + 1) * (2 * radius[1] + 1) * (2 * radius[2] + 1));
  const double cov_norm = n > 1.0 ? n / (n - 1.0) : 1.0;
  const double c1 = (0.01 * opts.data_range) * (0.01 * opts.data_range);
  const double c2 = (0.03 * opts.data_range) * (0.03 * opts.data_range);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t iy = radius[0]; iy + radius[0] < d.ny; ++iy) {
    for (std::size_t iz = radius[1]; iz + radius[1] < d.nz; ++iz) {
      for (std::size_t ix = radius[2]; ix + radius[2] < d.nx; ++ix) {
        if (!in_mask(mask, d.index(iy, iz, ix))) continue;
        const std::array<std::size_t, 3> lo{iy - radius[0], iz - radius[1], ix - radius[2]};
        const std::array<std::size_t, 3> hi{iy + radius[0], iz + radius[1], ix + radius[2]};
        const double dx = sx.box(lo, hi) / n;
        const double dy = sy.box(lo, hi) / n;
        const double mx = ox + dx;
        const double my = oy + dy;
        const double vx = std::max(0.0, cov_norm * (sxx.box(lo, hi) / n - dx * dx));
        const double vy = std::max(0.0, cov_norm * (syy.box(lo, hi) / n - dy * dy));
        const double vxy = cov_norm * (sxy.box(lo, hi) / n - dx * dy);
        total += ((2.0 * mx * my + c1) * (2.0 * vxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  if (count == 0) throw Error(ErrorCode::kInvalidInput, "no SSIM window centres inside the mask");
  return total / static_cast<double>(count);
}

double artifact_power(const RealVolume& x, const RealVolume& ref) {
  require_pair(x, ref, "artifact_power");
  double err = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    err += (x[i] - ref[i]) * (x[i] - ref[i]);
    energy += ref[i] * ref[i];
  }
  if (energy == 0.0) throw Error(ErrorCode::kInvalidInput, "reference has zero energy");
  return err / energy;
}

double tenengrad(const RealVolume& x, const RealVolume* mask) {
  require_finite(x.span(), "tenengrad");
  if (mask) require_same_dims(mask->dims(), x.dims(), "tenengrad mask");
  const Dims d = x.dims();
  if (d.ny < 3 || d.nz < 3 || d.nx < 3) return 0.0;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t iy = 1; iy + 1 < d.ny; ++iy) {
    for (std::size_t iz = 1; iz + 1 < d.nz; ++iz) {
      for (std::size_t ix = 1; ix + 1 < d.nx; ++ix) {
        if (!in_mask(mask, d.index(iy, iz, ix))) continue;
        double g2 = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
          const double g = sobel3(x, iy, iz, ix, axis);
          g2 += g * g;
        }
        total += g2;
        ++count;
      }
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double average_edge_strength(const RealVolume& x, const RealVolume* mask) {
  require_finite(x.span(), "average_edge_strength");
  if (mask) require_same_dims(mask->dims(), x.dims(), "average_edge_strength mask");
  const Dims d = x.dims();
  if (d.ny < 3 || d.nz < 3) return 0.0;
  double slice_sum = 0.0;
  std::size_t slices = 0;
  std::vector<double> mags;
  for (std::size_t ix = 0; ix < d.nx; ++ix) {
    mags.clear();
    for (std::size_t iy = 1; iy + 1 < d.ny; ++iy) {
      for (std::size_t iz = 1; iz + 1 < d.nz; ++iz) {
        if (!in_mask(mask, d.index(iy, iz, ix))) continue;
        double gy = 0.0;
        double gz = 0.0;
        for (int a = -1; a <= 1; ++a) {
          for (int b = -1; b <= 1; ++b) {
            const double v = x.at(iy + a, iz + b, ix);
            gy += kDerivative[static_cast<std::size_t>(a + 1)] * kSmooth[static_cast<std::size_t>(b + 1)] * v;
            gz += kSmooth[static_cast<std::size_t>(a + 1)] * kDerivative[static_cast<std::size_t>(b + 1)] * v;
          }
        }
        mags.push_back(std::hypot(gy, gz));
      }
    }
    if (mags.empty()) continue;
    const double threshold = percentile(mags, 90.0);
    double edge_sum = 0.0;
    std::size_t edges = 0;
    for (double m : mags) {
      if (m > threshold) {
        edge_sum += m;
        ++edges;
      }
    }
    if (edges == 0) continue;
    slice_sum += edge_sum / static_cast<double>(edges);
    ++slices;
  }
  return slices ? slice_sum / static_cast<double>(slices) : 0.0;
}

std::vector<std::string> MetricReport::to_json_rows() const {
  std::vector<std::string> rows;
  for (const auto& [name, value] : values) {
    nlohmann::ordered_json j;
    j["recon_id"] = recon_id;
    j["ref_id"] = ref_id;
    j["metric"] = name;
    j["value"] = value;
    rows.push_back(j.dump());
  }
  return rows;
}

}  // namespace momoc

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "momoc/volume.hpp"

namespace momoc {

// Linear-interpolation percentile (q in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double q);

struct PreprocessOptions {
  double percentile = 99.9;
  // Divide both volumes by the reference's percentile instead of each by its own.
  bool share_reference_percentile = false;
};

// Masks both volumes, scales each by its in-mask percentile and clips values
// above 1. Returns (recon, ref).
std::pair<RealVolume, RealVolume> preprocess_pair(const RealVolume& recon, const RealVolume& ref,
                                                  const RealVolume& mask,
                                                  const PreprocessOptions& opts = {});

// Scales by the percentile over all voxels and clips above 1.
RealVolume normalize_percentile(const RealVolume& vol, double q = 99.9);

inline constexpr double kPsnrCapDb = 100.0;

// 10 log10(1 / MSE) with unit data range, capped at 100 dB when MSE < 1e-10.
// With a mask the MSE runs over in-mask voxels only.
double psnr(const RealVolume& x, const RealVolume& ref, const RealVolume* mask = nullptr);

struct SsimOptions {
  std::size_t window = 7;
  double data_range = 1.0;
  // Average 2D SSIM over axial (fixed-x) slices instead of the 3D window.
  bool slice_wise = false;
};

// Uniform-window SSIM averaged over window centres where the full window fits
// (and, with a mask, the centre is in the mask).
double ssim(const RealVolume& x, const RealVolume& ref, const RealVolume* mask = nullptr,
            const SsimOptions& opts = {});

// sum |x - ref|^2 / sum |ref|^2
double artifact_power(const RealVolume& x, const RealVolume& ref);

// Mean squared 3D Sobel gradient magnitude over interior voxels.
double tenengrad(const RealVolume& x, const RealVolume* mask = nullptr);

// Mean 2D Sobel gradient magnitude over edge pixels of axial slices, edges
// being pixels above the slice's 90th percentile of in-mask magnitudes.
double average_edge_strength(const RealVolume& x, const RealVolume* mask = nullptr);

// Metric values of one reconstruction, in insertion order.
struct MetricReport {
  std::string recon_id;
  std::string ref_id;
  std::vector<std::pair<std::string, double>> values;
  std::string preprocessing;

  void add(std::string name, double value) { values.emplace_back(std::move(name), value); }
  // One JSON object per metric: {recon_id, ref_id, metric, value}.
  std::vector<std::string> to_json_rows() const;
};

}  // namespace momoc

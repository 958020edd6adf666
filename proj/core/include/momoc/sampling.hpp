#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace momoc {

// A phase-encode line is addressed by ky * nz + kz on the (ky, kz) grid.
using LineIndex = std::size_t;

// Cartesian undersampling mask over (ky, kz) plus the partition of the
// sampled lines into shots.
struct SamplingPlan {
  std::size_t ny = 0;
  std::size_t nz = 0;
  double accel = 1.0;
  std::size_t acs_y = 0;
  std::size_t acs_z = 0;
  double pf_z = 1.0;
  std::size_t n_shots = 1;
  std::uint64_t seed = 0;

  // ny * nz entries, 1 where the line is sampled.
  std::vector<std::uint8_t> mask;
  // One entry per sampled line in ascending LineIndex order.
  std::vector<std::uint32_t> shot_of_line;
  // Sampled lines of each shot, ascending.
  std::vector<std::vector<LineIndex>> shots;

  std::size_t n_sampled() const { return shot_of_line.size(); }
  const std::vector<LineIndex>& lines_of_shot(std::size_t shot) const { return shots.at(shot); }

  // Number of kz indices kept by partial Fourier, counted from kz = 0.
  std::size_t pf_retained_z() const;
  bool in_acs(std::size_t ky, std::size_t kz) const;
  bool in_center_block(std::size_t ky, std::size_t kz) const;

  // Rebuilds `shots` from mask and shot_of_line and checks the typed invariants.
  void rebuild_shots();
};

SamplingPlan generate_plan(std::size_t ny, std::size_t nz, double accel, std::size_t acs_y,
                           std::size_t acs_z, double pf_z, std::size_t n_shots,
                           std::uint64_t seed);

// Every shot and every sampled line, with no partial Fourier.
SamplingPlan full_sampling_plan(std::size_t ny, std::size_t nz, std::size_t n_shots = 1);

// Copy of `plan` keeping only the listed shots; shot numbering is preserved
// and dropped shots become empty.
SamplingPlan restrict_to_shots(const SamplingPlan& plan, const std::vector<std::size_t>& keep);

struct PlanStats {
  double achieved_accel = 0.0;
  std::vector<std::size_t> lines_per_shot;
  bool acs_complete = false;
  bool pf_respected = false;
  bool center_in_first_shot = false;
};

PlanStats plan_stats(const SamplingPlan& plan);

std::string plan_to_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(std::string_view text);

}  // namespace momoc

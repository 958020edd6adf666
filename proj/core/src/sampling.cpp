#include "momoc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "momoc/error.hpp"

namespace momoc {
namespace {

constexpr double kAccelTolerance = 0.02;

std::size_t block_start(std::size_t n, std::size_t width) { return n / 2 - width / 2; }

bool in_block(std::size_t k, std::size_t n, std::size_t width) {
  if (width == 0) return false;
  const std::size_t start = block_start(n, width);
  return k >= start && k < start + width;
}

}  // namespace

std::size_t SamplingPlan::pf_retained_z() const {
  return static_cast<std::size_t>(std::lround(pf_z * static_cast<double>(nz)));
}

bool SamplingPlan::in_acs(std::size_t ky, std::size_t kz) const {
  return in_block(ky, ny, acs_y) && in_block(kz, nz, acs_z);
}

bool SamplingPlan::in_center_block(std::size_t ky, std::size_t kz) const {
  return in_block(ky, ny, std::min<std::size_t>(3, ny)) &&
         in_block(kz, nz, std::min<std::size_t>(3, nz));
}

void SamplingPlan::rebuild_shots() {
  if (mask.size() != ny * nz) {
    throw Error(ErrorCode::kInvalidInput, "sampling mask size does not match ny*nz");
  }
  shots.assign(n_shots, {});
  std::size_t k = 0;
  for (LineIndex line = 0; line < mask.size(); ++line) {
    if (mask[line] == 0) continue;
    if (mask[line] != 1) throw Error(ErrorCode::kInvalidInput, "sampling mask must be binary");
    if (k >= shot_of_line.size()) {
      throw Error(ErrorCode::kInvalidInput, "shot_of_line shorter than sampled line count");
    }
    const std::uint32_t s = shot_of_line[k++];
    if (s >= n_shots) throw Error(ErrorCode::kInvalidInput, "shot index out of range");
    shots[s].push_back(line);
  }
  if (k != shot_of_line.size()) {
    throw Error(ErrorCode::kInvalidInput, "shot_of_line longer than sampled line count");
  }
}

SamplingPlan generate_plan(std::size_t ny, std::size_t nz, double accel, std::size_t acs_y,
                           std::size_t acs_z, double pf_z, std::size_t n_shots,
                           std::uint64_t seed) {
  if (ny == 0 || nz == 0) throw Error(ErrorCode::kConfiguration, "empty phase-encode grid");
  if (!(accel >= 1.0) || !std::isfinite(accel)) {
    throw Error(ErrorCode::kConfiguration, "acceleration must be >= 1");
  }
  if (acs_y > ny || acs_z > nz) throw Error(ErrorCode::kConfiguration, "ACS block exceeds grid");
  if (!(pf_z > 0.5 && pf_z <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "partial-Fourier fraction must be in (0.5, 1]");
  }
  if (n_shots == 0) throw Error(ErrorCode::kConfiguration, "n_shots must be >= 1");

  SamplingPlan plan;
  plan.ny = ny;
  plan.nz = nz;
  plan.accel = accel;
  plan.acs_y = acs_y;
  plan.acs_z = acs_z;
  plan.pf_z = pf_z;
  plan.n_shots = n_shots;
  plan.seed = seed;
  plan.mask.assign(ny * nz, 0);

  const std::size_t kz_keep = plan.pf_retained_z();
  std::vector<LineIndex> acs_lines;
  std::vector<LineIndex> candidates;
  for (std::size_t ky = 0; ky < ny; ++ky) {
    for (std::size_t kz = 0; kz < nz; ++kz) {
      const LineIndex line = ky * nz + kz;
      if (plan.in_acs(ky, kz)) {
        acs_lines.push_back(line);
      } else if (kz < kz_keep) {
        candidates.push_back(line);
      }
    }
  }

  const double total = static_cast<double>(ny * nz);
  const auto per_shot =
      static_cast<std::size_t>(std::llround(total / (accel * static_cast<double>(n_shots))));
  const std::size_t available = acs_lines.size() + candidates.size();
  const std::size_t budget = std::min(per_shot * n_shots, available);
  if (acs_lines.size() > budget) {
    throw Error(ErrorCode::kConfiguration, "ACS block alone exceeds the sampling budget");
  }
  if (budget == 0) throw Error(ErrorCode::kConfiguration, "sampling budget is empty");
  const double achieved = total / static_cast<double>(budget);
  if (std::abs(achieved - accel) > kAccelTolerance * accel) {
    throw Error(ErrorCode::kConfiguration,
                "requested acceleration is not reachable with this ACS/partial-Fourier setting");
  }

  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (LineIndex line : acs_lines) plan.mask[line] = 1;
  for (std::size_t i = 0; i < budget - acs_lines.size(); ++i) plan.mask[candidates[i]] = 1;

  // Shot sizes differ by at most one; shot 0 starts with the central 3x3
  // lines and the rest are dealt in random order.
  std::vector<std::size_t> capacity(n_shots, budget / n_shots);
  for (std::size_t s = 0; s < budget % n_shots; ++s) ++capacity[s];

  std::vector<LineIndex> center;
  std::vector<LineIndex> rest;
  for (LineIndex line = 0; line < plan.mask.size(); ++line) {
    if (!plan.mask[line]) continue;
    (plan.in_center_block(line / nz, line % nz) ? center : rest).push_back(line);
  }
  if (center.size() > capacity[0]) {
    throw Error(ErrorCode::kConfiguration, "first shot cannot hold the central 3x3 block");
  }
  std::shuffle(rest.begin(), rest.end(), rng);

  std::vector<std::uint32_t> shot_of(plan.mask.size(), 0);
  for (LineIndex line : center) shot_of[line] = 0;
  std::size_t shot = 0;
  std::size_t filled = center.size();
  for (LineIndex line : rest) {
    while (filled >= capacity[shot]) {
      ++shot;
      filled = 0;
    }
    shot_of[line] = static_cast<std::uint32_t>(shot);
    ++filled;
  }

  plan.shot_of_line.reserve(budget);
  for (LineIndex line = 0; line < plan.mask.size(); ++line) {
    if (plan.mask[line]) plan.shot_of_line.push_back(shot_of[line]);
  }
  plan.rebuild_shots();
  return plan;
}

SamplingPlan full_sampling_plan(std::size_t ny, std::size_t nz, std::size_t n_shots) {
  return generate_plan(ny, nz, 1.0, 0, 0, 1.0, n_shots, 0);
}

SamplingPlan restrict_to_shots(const SamplingPlan& plan, const std::vector<std::size_t>& keep) {
  std::vector<bool> kept(plan.n_shots, false);
  for (std::size_t s : keep) {
    if (s >= plan.n_shots) throw Error(ErrorCode::kInvalidInput, "kept shot out of range");
    kept[s] = true;
  }
  SamplingPlan out = plan;
  out.shot_of_line.clear();
  std::size_t k = 0;
  for (LineIndex line = 0; line < plan.mask.size(); ++line) {
    if (!plan.mask[line]) continue;
    const std::uint32_t s = plan.shot_of_line[k++];
    if (kept[s]) {
      out.shot_of_line.push_back(s);
    } else {
      out.mask[line] = 0;
    }
  }
  out.rebuild_shots();
  return out;
}

PlanStats plan_stats(const SamplingPlan& plan) {
  PlanStats stats;
  stats.achieved_accel =
      plan.n_sampled() == 0
          ? 0.0
          : static_cast<double>(plan.ny * plan.nz) / static_cast<double>(plan.n_sampled());
  for (const auto& s : plan.shots) stats.lines_per_shot.push_back(s.size());
  stats.acs_complete = true;
  stats.pf_respected = true;
  stats.center_in_first_shot = true;
  const std::size_t kz_keep = plan.pf_retained_z();
  std::vector<std::uint32_t> shot_of(plan.mask.size(), 0);
  for (std::size_t s = 0; s < plan.shots.size(); ++s) {
    for (LineIndex line : plan.shots[s]) shot_of[line] = static_cast<std::uint32_t>(s);
  }
  for (std::size_t ky = 0; ky < plan.ny; ++ky) {
    for (std::size_t kz = 0; kz < plan.nz; ++kz) {
      const LineIndex line = ky * plan.nz + kz;
      const bool sampled = plan.mask[line] != 0;
      const bool acs = plan.in_acs(ky, kz);
      if (acs && !sampled) stats.acs_complete = false;
      if (!acs && kz >= kz_keep && sampled) stats.pf_respected = false;
      if (sampled && plan.in_center_block(ky, kz) && shot_of[line] != 0) {
        stats.center_in_first_shot = false;
      }
    }
  }
  return stats;
}

std::string plan_to_json(const SamplingPlan& plan) {
  nlohmann::json j;
  j["dims"] = {plan.ny, plan.nz};
  j["accel"] = plan.accel;
  j["acs"] = {plan.acs_y, plan.acs_z};
  j["pf_z"] = plan.pf_z;
  j["n_shots"] = plan.n_shots;
  j["seed"] = plan.seed;
  // Run lengths alternate unsampled/sampled, starting with unsampled.
  std::vector<std::size_t> runs;
  std::uint8_t current = 0;
  std::size_t run = 0;
  for (std::uint8_t v : plan.mask) {
    if (v == current) {
      ++run;
    } else {
      runs.push_back(run);
      current = v;
      run = 1;
    }
  }
  runs.push_back(run);
  j["mask_rle"] = runs;
  j["shot_of_line"] = plan.shot_of_line;
  return j.dump();
}

SamplingPlan plan_from_json(std::string_view text) {
  SamplingPlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    plan.ny = j.at("dims").at(0).get<std::size_t>();
    plan.nz = j.at("dims").at(1).get<std::size_t>();
    plan.accel = j.at("accel").get<double>();
    plan.acs_y = j.at("acs").at(0).get<std::size_t>();
    plan.acs_z = j.at("acs").at(1).get<std::size_t>();
    plan.pf_z = j.at("pf_z").get<double>();
    plan.n_shots = j.at("n_shots").get<std::size_t>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.mask.reserve(plan.ny * plan.nz);
    std::uint8_t value = 0;
    for (std::size_t run : j.at("mask_rle").get<std::vector<std::size_t>>()) {
      if (plan.mask.size() + run > plan.ny * plan.nz) {
        throw Error(ErrorCode::kInvalidInput, "mask run lengths exceed grid size");
      }
      plan.mask.insert(plan.mask.end(), run, value);
      value ^= 1;
    }
    plan.shot_of_line = j.at("shot_of_line").get<std::vector<std::uint32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("malformed plan JSON: ") + e.what());
  }
  plan.rebuild_shots();
  return plan;
}

}  // namespace momoc

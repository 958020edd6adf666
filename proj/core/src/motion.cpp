#include "momoc/motion.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <json.hpp>

#include "momoc/operator.hpp"

namespace momoc {

SeverityLevel SeverityLevel::from_name(std::string_view name) {
  if (name == "mild") return mild();
  if (name == "severe") return severe();
  throw Error(ErrorCode::kConfiguration, "unknown severity level '" + std::string(name) + "'");
}

MotionTrajectory MotionTrajectory::zeros(std::size_t n_shots) {
  MotionTrajectory t;
  t.per_shot.assign(n_shots, RigidParams{});
  return t;
}

MotionTrajectory sample_trajectory(const SeverityLevel& sev, std::size_t n_shots,
                                   std::uint64_t seed) {
  if (sev.n_events >= n_shots) {
    throw Error(ErrorCode::kConfiguration, "severity needs more shots than events");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> candidates(n_shots - 1);
  std::iota(candidates.begin(), candidates.end(), std::size_t{1});
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::size_t> event_shots(candidates.begin(),
                                       candidates.begin() + static_cast<long>(sev.n_events));
  std::sort(event_shots.begin(), event_shots.end());

  std::uniform_real_distribution<double> primary(-sev.primary_bound_deg, sev.primary_bound_deg);
  std::uniform_real_distribution<double> perturb(-sev.perturb_bound, sev.perturb_bound);
  std::uniform_int_distribution<int> axis_pick(0, 1);

  MotionTrajectory traj = MotionTrajectory::zeros(n_shots);
  for (std::size_t shot : event_shots) {
    MotionEvent ev;
    ev.shot_index = shot;
    ev.primary_axis = kEventRotationAxes[static_cast<std::size_t>(axis_pick(rng))];
    ev.primary_deg = primary(rng);
    for (int a = 0; a < 3; ++a) {
      if (a != ev.primary_axis) ev.perturbations.rot_deg[static_cast<std::size_t>(a)] = perturb(rng);
    }
    for (auto& t : ev.perturbations.trans_vox) t = perturb(rng);
    traj.events.push_back(ev);
  }

  RigidParams pose;
  std::size_t next_event = 0;
  for (std::size_t s = 0; s < n_shots; ++s) {
    if (next_event < traj.events.size() && traj.events[next_event].shot_index == s) {
      const MotionEvent& ev = traj.events[next_event++];
      for (std::size_t a = 0; a < 3; ++a) {
        pose.rot_deg[a] += ev.perturbations.rot_deg[a];
        pose.trans_vox[a] += ev.perturbations.trans_vox[a];
      }
      pose.rot_deg[static_cast<std::size_t>(ev.primary_axis)] += ev.primary_deg;
    }
    traj.per_shot[s] = pose;
  }
  return traj;
}

MultiCoilKSpace corrupt(const ComplexVolume& img, const CoilSet& coils, const SamplingPlan& plan,
                        const MotionTrajectory& traj) {
  const EncodingOperator op(coils, plan);
  require_same_dims(img.dims(), op.dims(), "corrupt image vs coils");
  if (traj.n_shots() != plan.n_shots) {
    throw Error(ErrorCode::kInvalidInput, "trajectory length does not match the shot count");
  }
  const auto shots = op.forward(img, traj.per_shot);
  MultiCoilKSpace ksp(coils.n_coils(), ComplexVolume(img.dims()));
  for (std::size_t s = 0; s < shots.size(); ++s) {
    for (std::size_t c = 0; c < coils.n_coils(); ++c) {
      scatter_lines(shots[s].coil(c), plan.lines_of_shot(s), ksp[c]);
    }
  }
  return ksp;
}

std::string trajectory_to_json(const MotionTrajectory& traj) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : traj.per_shot) j.push_back(p.as_array());
  return j.dump();
}

MotionTrajectory trajectory_from_json(std::string_view text) {
  MotionTrajectory traj;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& row : j) {
      traj.per_shot.push_back(RigidParams::from_array(row.get<std::array<double, 6>>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("malformed trajectory JSON: ") + e.what());
  }
  for (const auto& p : traj.per_shot) require_finite(p);
  return traj;
}

}  // namespace momoc

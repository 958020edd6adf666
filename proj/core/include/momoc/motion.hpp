#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "momoc/encoding.hpp"
#include "momoc/rigid.hpp"

namespace momoc {

struct SeverityLevel {
  std::string name;
  std::size_t n_events = 0;
  double primary_bound_deg = 0.0;
  // Shared bound for the five perturbed parameters: degrees for rotations,
  // voxels for translations.
  double perturb_bound = 0.0;

  static SeverityLevel mild() { return {"mild", 1, 5.0, 1.0}; }
  static SeverityLevel severe() { return {"severe", 3, 15.0, 5.0}; }
  static SeverityLevel from_name(std::string_view name);
};

// Storage axes (see RigidParams) that carry the primary rotation of an
// event: rotation in the ky-kz plane (about x) and in the kx-kz plane (about y).
inline constexpr std::array<int, 2> kEventRotationAxes{2, 0};

struct MotionEvent {
  std::size_t shot_index = 0;
  int primary_axis = 0;
  double primary_deg = 0.0;
  // Increments applied to the other five parameters.
  RigidParams perturbations;
};

struct MotionTrajectory {
  std::vector<RigidParams> per_shot;
  // Events that generated the trajectory, empty when read from a file.
  std::vector<MotionEvent> events;

  std::size_t n_shots() const { return per_shot.size(); }
  static MotionTrajectory zeros(std::size_t n_shots);
};

// Event-based inter-shot motion. Poses are cumulative: each event adds to the
// pose of the previous shot and persists until the next event.
MotionTrajectory sample_trajectory(const SeverityLevel& sev, std::size_t n_shots,
                                   std::uint64_t seed);

// Motion-corrupted undersampled k-space on the full grid, one volume per coil.
MultiCoilKSpace corrupt(const ComplexVolume& img, const CoilSet& coils, const SamplingPlan& plan,
                        const MotionTrajectory& traj);

// JSON array of 6-vectors (rot_y, rot_z, rot_x, t_y, t_z, t_x), one per shot.
std::string trajectory_to_json(const MotionTrajectory& traj);
MotionTrajectory trajectory_from_json(std::string_view text);

}  // namespace momoc

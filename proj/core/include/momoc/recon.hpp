#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "momoc/encoding.hpp"
#include "momoc/motion.hpp"

namespace momoc {

// Solver hyperparameters. Operators are unitary, so the step size and the
// regularization weight are expressed relative to the data scale rather than
// in raw scanner units.
struct ReconConfig {
  std::size_t l1_steps = 40;
  double l1_step_size = 1.0;
  // Wavelet weight relative to max |A^H y|. `lambda_abs`, when set, replaces
  // it with an absolute weight.
  double lambda_rel = 1e-3;
  std::optional<double> lambda_abs;
  // Cycle through one shot per gradient step instead of the full batch.
  bool batch_per_shot = false;

  std::size_t altopt_max_iter = 500;
  std::size_t altopt_recon_steps = 2;
  std::size_t altopt_motion_steps = 4;
  double altopt_motion_lr = 5e-2;
  // Stop a level once the two reconstruction sub-steps of an iteration
  // differ by less than this fraction of the first one.
  double altopt_early_stop = 0.02;
  // Resolution pyramid: level l uses the central 1/2^l of k-space per axis
  // (never below 16 samples), coarsest first.
  std::size_t altopt_levels = 3;
  bool altopt_estimate_rotation = true;
  double dc_threshold = 0.70;

  void validate() const;
};

std::string recon_config_to_json(const ReconConfig& cfg);
// Missing keys keep their defaults.
ReconConfig recon_config_from_json(std::string_view text);

// Zero-filled coil-combined magnitude image.
RealVolume recon_adjoint(const MultiCoilKSpace& ksp, const CoilSet& coils,
                         const SamplingPlan& plan);

struct L1Result {
  ComplexVolume image;
  double lambda = 0.0;
  // Objective 0.5*||Ax - y||^2 + lambda*||Wx||_1 before each step and after
  // the last one.
  std::vector<double> losses;
};

// Subgradient descent from x = 0 on the wavelet-regularized least squares
// problem under the given per-shot poses.
ComplexVolume recon_l1(const MultiCoilKSpace& ksp, const CoilSet& coils, const SamplingPlan& plan,
                       const MotionTrajectory& traj, const ReconConfig& cfg);
L1Result recon_l1_detailed(const MultiCoilKSpace& ksp, const CoilSet& coils,
                           const SamplingPlan& plan, const MotionTrajectory& traj,
                           const ReconConfig& cfg);

// ||A_s x - y_s|| / ||y_s|| per shot; 0 for shots without data.
std::vector<double> dc_loss_per_shot(const ComplexVolume& x, const MultiCoilKSpace& ksp,
                                     const CoilSet& coils, const SamplingPlan& plan,
                                     const MotionTrajectory& traj);

// Shots with loss <= threshold, plus shot 0. Throws kDegenerateExclusion when
// no shot passes the threshold.
std::vector<std::size_t> threshold_shots(const std::vector<double>& losses, const ReconConfig& cfg);

struct AltOptResult {
  MotionTrajectory trajectory;
  ComplexVolume image;
  // Per-shot DC losses of the alternating estimate, before thresholding.
  std::vector<double> dc_losses;
  std::vector<std::size_t> kept_shots;
  // Iterations summed over levels, and per level (coarsest first);
  // early_stopped refers to the finest level.
  std::size_t iterations = 0;
  std::vector<std::size_t> level_iterations;
  bool early_stopped = false;
  // Data loss normalized by its initial value on the current level, one
  // entry per reconstruction sub-step.
  std::vector<double> recon_losses;
};

// Alternates wavelet-regularized image updates with per-shot rigid motion
// updates (Adam-scaled steps of size altopt_motion_lr), coarse to fine, then
// thresholds shots by DC loss and reconstructs from scratch. Every shot is
// estimated; the returned trajectory is expressed relative to shot 0.
AltOptResult altopt(const MultiCoilKSpace& ksp, const CoilSet& coils, const SamplingPlan& plan,
                    const ReconConfig& cfg);

namespace detail {

struct ShotMotionGradient {
  double loss = 0.0;  // ||A_s x - y_s||^2 / ||y_s||^2
  std::array<double, 6> grad{};  // same ordering as RigidParams::as_array
};

// Analytic gradient of the normalized per-shot data loss with respect to
// the shot pose. Translations differentiate the phase ramp; rotations
// differentiate the trilinear interpolant.
ShotMotionGradient shot_motion_gradient(const ComplexVolume& x, const ShotSamples& y,
                                        const CoilSet& coils, const SamplingPlan& plan,
                                        std::size_t shot, const RigidParams& p,
                                        bool with_rotation = true);

double shot_motion_loss(const ComplexVolume& x, const ShotSamples& y, const CoilSet& coils,
                        const SamplingPlan& plan, std::size_t shot, const RigidParams& p);

}  // namespace detail
}  // namespace momoc

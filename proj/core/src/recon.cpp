#include "momoc/recon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "momoc/fft.hpp"
#include "momoc/operator.hpp"
#include "momoc/wavelet.hpp"

namespace momoc {
namespace {

constexpr double kDivergenceFactor = 10.0;

double squared_norm(const std::vector<ShotSamples>& shots) {
  double s = 0.0;
  for (const auto& shot : shots) {
    for (const auto& v : shot.data) s += std::norm(v);
  }
  return s;
}

// residual = a - b, returns ||a - b||^2
double subtract_into(std::vector<ShotSamples>& a, const std::vector<ShotSamples>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].data.size(); ++i) {
      a[k].data[i] -= b[k].data[i];
      s += std::norm(a[k].data[i]);
    }
  }
  return s;
}

void check_kspace(const MultiCoilKSpace& ksp, const CoilSet& coils, const SamplingPlan& plan) {
  coils.validate();
  if (ksp.size() != coils.n_coils()) {
    throw Error(ErrorCode::kInvalidInput, "k-space coil count does not match the coil set");
  }
  for (const auto& k : ksp) {
    require_same_dims(k.dims(), coils.dims(), "k-space vs coil maps");
    require_finite(k.span(), "k-space");
  }
  check_encoding_inputs(coils.dims(), coils, plan);
}

// One (sub)gradient evaluation of 0.5*||A x - y||^2 + lambda*||W x||_1.
struct Objective {
  const EncodingOperator& op;
  const std::vector<ShotSamples>& y;
  double lambda;

  struct Evaluation {
    double data_loss = 0.0;
    double total = 0.0;
    ComplexVolume gradient;
  };

  Evaluation evaluate(const ComplexVolume& x, std::span<const RigidParams> poses,
                      std::optional<std::size_t> only_shot = std::nullopt) const {
    Evaluation e;
    if (only_shot) {
      const std::size_t s = *only_shot;
      ShotSamples r = op.forward_shot(x, s, poses[s]);
      for (std::size_t i = 0; i < r.data.size(); ++i) {
        r.data[i] -= y[s].data[i];
        e.data_loss += std::norm(r.data[i]);
      }
      e.gradient = op.adjoint_shot(r, s, poses[s]);
    } else {
      auto r = op.forward(x, poses);
      e.data_loss = subtract_into(r, y);
      e.gradient = op.adjoint(r, poses);
    }
    e.data_loss *= 0.5;
    e.total = e.data_loss;
    if (lambda > 0.0) {
      const WaveletL1 w = wavelet_l1(x);
      e.total += lambda * w.value;
      for (std::size_t i = 0; i < x.size(); ++i) e.gradient[i] += lambda * w.subgradient[i];
    }
    return e;
  }
};

double resolve_lambda(const ReconConfig& cfg, const EncodingOperator& op,
                      const std::vector<ShotSamples>& y, std::span<const RigidParams> poses) {
  if (cfg.lambda_abs) return *cfg.lambda_abs;
  if (cfg.lambda_rel == 0.0) return 0.0;
  const ComplexVolume back = op.adjoint(y, poses);
  double peak = 0.0;
  for (const auto& v : back) peak = std::max(peak, std::abs(v));
  return cfg.lambda_rel * peak;
}

void axpy(ComplexVolume& x, double alpha, const ComplexVolume& g) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * g[i];
}

std::vector<std::size_t> nonempty_shots(const SamplingPlan& plan) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < plan.n_shots; ++s) {
    if (!plan.lines_of_shot(s).empty()) out.push_back(s);
  }
  return out;
}

L1Result run_l1(const EncodingOperator& op, const std::vector<ShotSamples>& y,
                std::span<const RigidParams> poses, const ReconConfig& cfg) {
  L1Result result;
  result.lambda = resolve_lambda(cfg, op, y, poses);
  const Objective objective{op, y, result.lambda};
  result.image = ComplexVolume(op.dims());
  const double initial = 0.5 * squared_norm(y);
  const auto shots = nonempty_shots(op.plan());
  for (std::size_t step = 0; step < cfg.l1_steps; ++step) {
    std::optional<std::size_t> batch;
    if (cfg.batch_per_shot && !shots.empty()) batch = shots[step % shots.size()];
    const auto e = objective.evaluate(result.image, poses, batch);
    const double loss = batch ? objective.evaluate(result.image, poses).total : e.total;
    if (loss > kDivergenceFactor * initial && loss > 0.0) {
      throw Error(ErrorCode::kSolverDiverged,
                  "L1 reconstruction loss exceeded 10x its initial value at step " +
                      std::to_string(step));
    }
    result.losses.push_back(loss);
    axpy(result.image, -cfg.l1_step_size, e.gradient);
  }
  const double final_loss = objective.evaluate(result.image, poses).total;
  if (final_loss > kDivergenceFactor * initial && final_loss > 0.0) {
    throw Error(ErrorCode::kSolverDiverged, "L1 reconstruction diverged");
  }
  result.losses.push_back(final_loss);
  return result;
}


constexpr std::size_t kMinLevelDim = 16;

Dims level_dims(const Dims& full, std::size_t level) {
  auto shrink = [&](std::size_t n) {
    return std::max(std::min(n, kMinLevelDim), n >> std::min<std::size_t>(level, 63));
  };
  return {shrink(full.ny), shrink(full.nz), shrink(full.nx)};
}

// Copies the overlap of two centered spectra (DC at floor(n/2)), cropping or
// zero-padding each axis.
ComplexVolume recenter_spectrum(const ComplexVolume& k, const Dims& target) {
  const Dims src = k.dims();
  ComplexVolume out(target);
  auto offset = [](std::size_t from, std::size_t to) {
    return static_cast<long>(from / 2) - static_cast<long>(to / 2);
  };
  const long oy = offset(src.ny, target.ny);
  const long oz = offset(src.nz, target.nz);
  const long ox = offset(src.nx, target.nx);
  for (std::size_t iy = 0; iy < target.ny; ++iy) {
    const long sy = static_cast<long>(iy) + oy;
    if (sy < 0 || sy >= static_cast<long>(src.ny)) continue;
    for (std::size_t iz = 0; iz < target.nz; ++iz) {
      const long sz = static_cast<long>(iz) + oz;
      if (sz < 0 || sz >= static_cast<long>(src.nz)) continue;
      for (std::size_t ix = 0; ix < target.nx; ++ix) {
        const long sx = static_cast<long>(ix) + ox;
        if (sx < 0 || sx >= static_cast<long>(src.nx)) continue;
        out.at(iy, iz, ix) = k.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sz),
                                  static_cast<std::size_t>(sx));
      }
    }
  }
  return out;
}

// Value-preserving scale between unitary spectra of different sizes.
double resolution_scale(const Dims& from, const Dims& to) {
  return std::sqrt(static_cast<double>(to.size()) / static_cast<double>(from.size()));
}

ComplexVolume resample_image(const ComplexVolume& img, const Dims& target) {
  ComplexVolume out = ifft3_centered(recenter_spectrum(fft3_centered(img), target));
  const double scale = resolution_scale(img.dims(), target);
  for (auto& v : out) v *= scale;
  return out;
}

// Data, coils and plan restricted to the central part of k-space.
struct LevelProblem {
  CoilSet coils;
  SamplingPlan plan;
  std::vector<ShotSamples> y;
};

LevelProblem make_level(const MultiCoilKSpace& ksp, const CoilSet& coils, const SamplingPlan& plan,
                        const Dims& dims) {
  const Dims full = coils.dims();
  if (dims == full) return {coils, plan, split_by_shot(ksp, plan)};

  LevelProblem level;
  level.plan = plan;
  level.plan.ny = dims.ny;
  level.plan.nz = dims.nz;
  level.plan.mask.assign(dims.ny * dims.nz, 0);
  level.plan.shot_of_line.clear();
  std::vector<std::uint32_t> shot_of(plan.mask.size(), 0);
  for (std::size_t s = 0; s < plan.n_shots; ++s) {
    for (LineIndex line : plan.lines_of_shot(s)) shot_of[line] = static_cast<std::uint32_t>(s);
  }
  const std::size_t oy = full.ny / 2 - dims.ny / 2;
  const std::size_t oz = full.nz / 2 - dims.nz / 2;
  for (std::size_t iy = 0; iy < dims.ny; ++iy) {
    for (std::size_t iz = 0; iz < dims.nz; ++iz) {
      const LineIndex big = (iy + oy) * full.nz + (iz + oz);
      if (!plan.mask[big]) continue;
      level.plan.mask[iy * dims.nz + iz] = 1;
      level.plan.shot_of_line.push_back(shot_of[big]);
    }
  }
  level.plan.rebuild_shots();

  const double scale = resolution_scale(full, dims);
  MultiCoilKSpace cropped;
  for (std::size_t c = 0; c < coils.n_coils(); ++c) {
    ComplexVolume k = recenter_spectrum(ksp[c], dims);
    for (auto& v : k) v *= scale;
    cropped.push_back(std::move(k));
    level.coils.maps.push_back(resample_image(coils.maps[c], dims));
  }
  level.y = split_by_shot(cropped, level.plan);
  return level;
}

// Adam moments for one shot's pose parameters.
struct AdamState {
  std::array<double, 6> m{};
  std::array<double, 6> v{};
  std::size_t t = 0;

  std::array<double, 6> step(const std::array<double, 6>& g, double lr) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-12;
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    std::array<double, 6> out{};
    for (std::size_t j = 0; j < 6; ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      out[j] = lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + kEps);
    }
    return out;
  }
};

// Alternating loop on one resolution level. Returns true on early stop.
bool alternate(const LevelProblem& problem, const ReconConfig& cfg, ComplexVolume& x,
               std::vector<RigidParams>& poses, AltOptResult& result) {
  const EncodingOperator op(problem.coils, problem.plan);
  const double initial = 0.5 * squared_norm(problem.y);
  const double lambda = resolve_lambda(cfg, op, problem.y, poses);
  const Objective objective{op, problem.y, lambda};
  const auto shots = nonempty_shots(problem.plan);
  std::vector<AdamState> adam(poses.size());

  for (std::size_t it = 0; it < cfg.altopt_max_iter; ++it) {
    ++result.iterations;
    std::vector<double> step_losses;
    for (std::size_t k = 0; k < cfg.altopt_recon_steps; ++k) {
      const auto e = objective.evaluate(x, poses);
      if (e.total > kDivergenceFactor * initial && e.total > 0.0) {
        throw Error(ErrorCode::kSolverDiverged, "alternating optimization diverged");
      }
      const double normalized = initial > 0.0 ? e.data_loss / initial : 0.0;
      step_losses.push_back(normalized);
      result.recon_losses.push_back(normalized);
      axpy(x, -cfg.l1_step_size, e.gradient);
    }
    if (step_losses.size() < 2 || step_losses[0] <= 0.0 ||
        std::abs(step_losses[0] - step_losses[1]) < cfg.altopt_early_stop * step_losses[0]) {
      return true;
    }
    for (std::size_t k = 0; k < cfg.altopt_motion_steps; ++k) {
      for (std::size_t s : shots) {
        const auto g = detail::shot_motion_gradient(x, problem.y[s], problem.coils, problem.plan,
                                                    s, poses[s], cfg.altopt_estimate_rotation);
        const auto delta = adam[s].step(g.grad, cfg.altopt_motion_lr);
        auto params = poses[s].as_array();
        for (std::size_t j = 0; j < 6; ++j) params[j] -= delta[j];
        poses[s] = RigidParams::from_array(params);
      }
    }
  }
  return false;
}

}  // namespace

void ReconConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kConfiguration, std::string(name) + " must be positive");
    }
  };
  positive(l1_step_size, "l1_step_size");
  positive(altopt_motion_lr, "altopt_motion_lr");
  positive(dc_threshold, "dc_threshold");
  if (!(lambda_rel >= 0.0)) throw Error(ErrorCode::kConfiguration, "lambda_rel must be >= 0");
  if (lambda_abs && !(*lambda_abs >= 0.0)) {
    throw Error(ErrorCode::kConfiguration, "lambda_abs must be >= 0");
  }
  if (!(altopt_early_stop >= 0.0)) {
    throw Error(ErrorCode::kConfiguration, "altopt_early_stop must be >= 0");
  }
  if (l1_steps == 0 || altopt_max_iter == 0 || altopt_recon_steps == 0 || altopt_levels == 0) {
    throw Error(ErrorCode::kConfiguration, "iteration counts must be positive");
  }
}

std::string recon_config_to_json(const ReconConfig& cfg) {
  nlohmann::json j;
  j["l1_steps"] = cfg.l1_steps;
  j["l1_step_size"] = cfg.l1_step_size;
  j["lambda_rel"] = cfg.lambda_rel;
  j["lambda_abs"] = cfg.lambda_abs ? nlohmann::json(*cfg.lambda_abs) : nlohmann::json(nullptr);
  j["batch_per_shot"] = cfg.batch_per_shot;
  j["altopt_max_iter"] = cfg.altopt_max_iter;
  j["altopt_recon_steps"] = cfg.altopt_recon_steps;
  j["altopt_motion_steps"] = cfg.altopt_motion_steps;
  j["altopt_motion_lr"] = cfg.altopt_motion_lr;
  j["altopt_early_stop"] = cfg.altopt_early_stop;
  j["altopt_levels"] = cfg.altopt_levels;
  j["altopt_estimate_rotation"] = cfg.altopt_estimate_rotation;
  j["dc_threshold"] = cfg.dc_threshold;
  return j.dump(2);
}

ReconConfig recon_config_from_json(std::string_view text) {
  ReconConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    auto read = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("l1_steps", cfg.l1_steps);
    read("l1_step_size", cfg.l1_step_size);
    read("lambda_rel", cfg.lambda_rel);
    if (j.contains("lambda_abs") && !j.at("lambda_abs").is_null()) {
      cfg.lambda_abs = j.at("lambda_abs").get<double>();
    }
    read("batch_per_shot", cfg.batch_per_shot);
    read("altopt_max_iter", cfg.altopt_max_iter);
    read("altopt_recon_steps", cfg.altopt_recon_steps);
    read("altopt_motion_steps", cfg.altopt_motion_steps);
    read("altopt_motion_lr", cfg.altopt_motion_lr);
    read("altopt_early_stop", cfg.altopt_early_stop);
    read("altopt_levels", cfg.altopt_levels);
    read("altopt_estimate_rotation", cfg.altopt_estimate_rotation);
    read("dc_threshold", cfg.dc_threshold);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("malformed recon config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RealVolume recon_adjoint(const MultiCoilKSpace& ksp, const CoilSet& coils,
                         const SamplingPlan& plan) {
  check_kspace(ksp, coils, plan);
  const Dims d = coils.dims();
  ComplexVolume acc(d);
  ComplexVolume masked(d);
  for (std::size_t c = 0; c < coils.n_coils(); ++c) {
    for (std::size_t line = 0; line < plan.mask.size(); ++line) {
      const cdouble* src = ksp[c].data() + line * d.nx;
      cdouble* dst = masked.data() + line * d.nx;
      if (plan.mask[line]) {
        std::copy_n(src, d.nx, dst);
      } else {
        std::fill_n(dst, d.nx, cdouble{0.0, 0.0});
      }
    }
    const ComplexVolume img = ifft3_centered(masked);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::conj(coils.maps[c][i]) * img[i];
  }
  RealVolume out(d);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    double weight = 0.0;
    for (const auto& m : coils.maps) weight += std::norm(m[i]);
    out[i] = std::abs(weight > 0.0 ? acc[i] / weight : acc[i]);
  }
  return out;
}

L1Result recon_l1_detailed(const MultiCoilKSpace& ksp, const CoilSet& coils,
                           const SamplingPlan& plan, const MotionTrajectory& traj,
                           const ReconConfig& cfg) {
  cfg.validate();
  check_kspace(ksp, coils, plan);
  const EncodingOperator op(coils, plan);
  const auto y = split_by_shot(ksp, plan);
  return run_l1(op, y, traj.per_shot, cfg);
}

ComplexVolume recon_l1(const MultiCoilKSpace& ksp, const CoilSet& coils, const SamplingPlan& plan,
                       const MotionTrajectory& traj, const ReconConfig& cfg) {
  return recon_l1_detailed(ksp, coils, plan, traj, cfg).image;
}

std::vector<double> dc_loss_per_shot(const ComplexVolume& x, const MultiCoilKSpace& ksp,
                                     const CoilSet& coils, const SamplingPlan& plan,
                                     const MotionTrajectory& traj) {
  check_kspace(ksp, coils, plan);
  const EncodingOperator op(coils, plan);
  const auto y = split_by_shot(ksp, plan);
  auto pred = op.forward(x, traj.per_shot);
  std::vector<double> losses(plan.n_shots, 0.0);
  for (std::size_t s = 0; s < plan.n_shots; ++s) {
    double res = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < y[s].data.size(); ++i) {
      res += std::norm(pred[s].data[i] - y[s].data[i]);
      ref += std::norm(y[s].data[i]);
    }
    losses[s] = ref > 0.0 ? std::sqrt(res / ref) : 0.0;
  }
  return losses;
}

std::vector<std::size_t> threshold_shots(const std::vector<double>& losses,
                                         const ReconConfig& cfg) {
  require_finite(losses, "DC losses");
  std::vector<std::size_t> keep;
  for (std::size_t s = 0; s < losses.size(); ++s) {
    if (losses[s] <= cfg.dc_threshold) keep.push_back(s);
  }
  if (keep.empty()) {
    throw Error(ErrorCode::kDegenerateExclusion, "every shot exceeds the DC-loss threshold");
  }
  if (keep.front() != 0) keep.insert(keep.begin(), 0);
  return keep;
}

namespace detail {

ShotMotionGradient shot_motion_gradient(const ComplexVolume& x, const ShotSamples& y,
                                        const CoilSet& coils, const SamplingPlan& plan,
                                        std::size_t shot, const RigidParams& p,
                                        bool with_rotation) {
  const Dims d = x.dims();
  const auto& lines = plan.lines_of_shot(shot);
  ShotMotionGradient out;
  double y_energy = 0.0;
  for (const auto& v : y.data) y_energy += std::norm(v);
  if (y_energy == 0.0 || lines.empty()) return out;

  RotationJet jet;
  if (with_rotation) {
    jet = rotate_with_derivatives(x, p.rot_deg);
  } else {
    jet.value = p.has_rotation() ? rotate(x, rotation_matrix(p.rot_deg)) : x;
  }

  // U = F(rotated x) with the pose's phase ramp; u = F^H U is the posed image.
  ComplexVolume spectrum_u = jet.value;
  fft3_inplace(spectrum_u, false);
  apply_phase_ramp(spectrum_u, p.trans_vox);
  ComplexVolume posed = spectrum_u;
  fft3_inplace(posed, true);

  ComplexVolume back(d);
  ComplexVolume coil_k(d);
  std::vector<cdouble> residual(lines.size() * d.nx);
  double loss = 0.0;
  for (std::size_t c = 0; c < coils.n_coils(); ++c) {
    coil_spectrum(coils.maps[c], posed, coil_k);
    gather_unshifted(coil_k, lines, residual);
    const auto measured = y.coil(c);
    for (std::size_t i = 0; i < residual.size(); ++i) {
      residual[i] -= measured[i];
      loss += std::norm(residual[i]);
    }
    std::fill(coil_k.begin(), coil_k.end(), cdouble{0.0, 0.0});
    scatter_unshifted(residual, lines, coil_k);
    coil_backproject_accumulate(coils.maps[c], coil_k, back);
  }
  out.loss = loss / y_energy;
  const double scale = 2.0 / y_energy;

  ComplexVolume spectrum_b = back;
  fft3_inplace(spectrum_b, false);
  const double two_pi = 2.0 * std::numbers::pi;
  std::array<double, 3> g_trans{0.0, 0.0, 0.0};
  std::size_t flat = 0;
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    const double ky = two_pi * static_cast<double>(signed_frequency(iy, d.ny)) / static_cast<double>(d.ny);
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      const double kz = two_pi * static_cast<double>(signed_frequency(iz, d.nz)) / static_cast<double>(d.nz);
      for (std::size_t ix = 0; ix < d.nx; ++ix, ++flat) {
        const double kx =
            two_pi * static_cast<double>(signed_frequency(ix, d.nx)) / static_cast<double>(d.nx);
        // Re(conj(B) * (-i k) * U) = k * Im(conj(B) * U)
        const double im = (std::conj(spectrum_b[flat]) * spectrum_u[flat]).imag();
        g_trans[0] += ky * im;
        g_trans[1] += kz * im;
        g_trans[2] += kx * im;
      }
    }
  }
  for (std::size_t a = 0; a < 3; ++a) out.grad[3 + a] = scale * g_trans[a];

  if (with_rotation) {
    apply_phase_ramp(spectrum_b, {-p.trans_vox[0], -p.trans_vox[1], -p.trans_vox[2]});
    fft3_inplace(spectrum_b, true);
    for (std::size_t j = 0; j < 3; ++j) {
      out.grad[j] = scale * dot(spectrum_b.span(), jet.d_deg[j].span()).real();
    }
  }
  return out;
}

double shot_motion_loss(const ComplexVolume& x, const ShotSamples& y, const CoilSet& coils,
                        const SamplingPlan& plan, std::size_t shot, const RigidParams& p) {
  double y_energy = 0.0;
  for (const auto& v : y.data) y_energy += std::norm(v);
  if (y_energy == 0.0) return 0.0;
  const ShotSamples pred = encode_shot(x, coils, plan, shot, p);
  double res = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) res += std::norm(pred.data[i] - y.data[i]);
  return res / y_energy;
}

}  // namespace detail

AltOptResult altopt(const MultiCoilKSpace& ksp, const CoilSet& coils, const SamplingPlan& plan,
                    const ReconConfig& cfg) {
  cfg.validate();
  check_kspace(ksp, coils, plan);
  const Dims full = coils.dims();

  AltOptResult result;
  std::vector<RigidParams> poses(plan.n_shots);
  ComplexVolume x;
  Dims previous{0, 0, 0};
  for (std::size_t level = cfg.altopt_levels; level-- > 0;) {
    const Dims dims = level_dims(full, level);
    if (dims == previous) continue;
    if (previous.size() > 0) {
      x = resample_image(x, dims);
      for (auto& p : poses) {
        for (std::size_t a = 0; a < 3; ++a) {
          p.trans_vox[a] *= static_cast<double>(dims[a]) / static_cast<double>(previous[a]);
        }
      }
    } else {
      x = ComplexVolume(dims);
    }
    const LevelProblem problem = make_level(ksp, coils, plan, dims);
    const std::size_t before = result.iterations;
    result.early_stopped = alternate(problem, cfg, x, poses, result);
    result.level_iterations.push_back(result.iterations - before);
    previous = dims;
  }

  // Poses so far share an arbitrary common offset with x; shot 0 is the
  // reference frame of the reported trajectory and of the final image.
  const MotionTrajectory absolute{poses, {}};
  result.dc_losses = dc_loss_per_shot(x, ksp, coils, plan, absolute);
  result.trajectory = MotionTrajectory::zeros(plan.n_shots);
  for (std::size_t s = 0; s < plan.n_shots; ++s) {
    result.trajectory.per_shot[s] = relative_pose(poses[s], poses[0]);
  }
  result.trajectory.per_shot[0] = RigidParams{};
  result.kept_shots = threshold_shots(result.dc_losses, cfg);
  const SamplingPlan kept_plan = restrict_to_shots(plan, result.kept_shots);
  const EncodingOperator kept_op(coils, kept_plan);
  const auto kept_y = split_by_shot(ksp, kept_plan);
  result.image = run_l1(kept_op, kept_y, result.trajectory.per_shot, cfg).image;
  return result;
}

}  // namespace momoc

// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failures (capped at 1).
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "momoc/encoding.hpp"
#include "momoc/eval.hpp"
#include "momoc/fft.hpp"
#include "momoc/io.hpp"
#include "momoc/metrics.hpp"
#include "momoc/motion.hpp"
#include "momoc/operator.hpp"
#include "momoc/phantom.hpp"
#include "momoc/pmas.hpp"
#include "momoc/recon.hpp"
#include "momoc/sampling.hpp"

namespace fs = std::filesystem;
using namespace momoc;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

ComplexVolume random_complex(const Dims& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  ComplexVolume v(d);
  for (auto& z : v) z = {n(rng), n(rng)};
  return v;
}

double adjoint_mismatch(std::uint64_t seed, bool rotations) {
  const Dims d{16, 16, 16};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t(-3, 3), r(-8, 8);
  RigidParams p;
  for (auto& v : p.trans_vox) v = t(rng);
  if (rotations)
    for (auto& v : p.rot_deg) v = r(rng);
  const auto coils = make_coil_maps(d, 2);
  const auto plan = generate_plan(16, 16, 2.0, 4, 4, 1.0, 4, seed);
  const std::size_t shot = seed % 4;
  const auto x = random_complex(d, seed + 1000);
  const auto ax = encode_shot(x, coils, plan, shot, p);
  ShotSamples y(2, plan.lines_of_shot(shot).size(), d.nx);
  const auto yv = random_complex(Dims{1, 1, y.data.size()}, seed + 2000);
  std::copy(yv.begin(), yv.end(), y.data.begin());
  const auto aty = adjoint_shot(y, coils, plan, shot, p);
  const cdouble lhs = dot(std::span<const cdouble>(ax.data), std::span<const cdouble>(y.data));
  const cdouble rhs = dot(x.span(), aty.span());
  return std::abs(lhs - rhs) /
         (norm2(std::span<const cdouble>(ax.data)) * norm2(std::span<const cdouble>(y.data)));
}

Verdict adjoint_correctness() {
  double worst_t = 0.0, worst_r = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    worst_t = std::max(worst_t, adjoint_mismatch(s, false));
    worst_r = std::max(worst_r, adjoint_mismatch(s + 100, true));
  }
  return {worst_t <= 1e-5 && worst_r <= 1e-2,
          "20+20 instances, worst translation-only " + fmt(worst_t) + ", with rotations " + fmt(worst_r)};
}

Verdict sampling_geometry() {
  const auto plan = generate_plan(222, 236, 4.94, 37, 37, 0.85, 52, 0);
  const auto st = plan_stats(plan);
  bool all_204 = st.lines_per_shot.size() == 52;
  for (auto n : st.lines_per_shot) all_204 = all_204 && n == 204;
  // Every line outside the kept partial-Fourier band must be an ACS line.
  bool pf_band_empty = true;
  for (std::size_t ky = 0; ky < plan.ny; ++ky)
    for (std::size_t kz = plan.pf_retained_z(); kz < plan.nz; ++kz)
      if (plan.mask[ky * plan.nz + kz] && !plan.in_acs(ky, kz)) pf_band_empty = false;
  bool center = true;
  for (std::size_t ky = plan.ny / 2 - 1; ky <= plan.ny / 2 + 1; ++ky)
    for (std::size_t kz = plan.nz / 2 - 1; kz <= plan.nz / 2 + 1; ++kz) {
      const auto& s0 = plan.lines_of_shot(0);
      center = center && std::find(s0.begin(), s0.end(), ky * plan.nz + kz) != s0.end();
    }
  const bool ok = all_204 && st.acs_complete && pf_band_empty && st.pf_respected && center &&
                  st.center_in_first_shot && plan.n_sampled() == 52 * 204;
  return {ok, std::to_string(plan.n_sampled()) + " lines, 204 per shot: " + (all_204 ? "yes" : "no") +
                  ", ACS complete: " + (st.acs_complete ? "yes" : "no") + ", PF band empty: " +
                  (pf_band_empty ? "yes" : "no") + ", center 3x3 in shot 0: " + (center ? "yes" : "no") +
                  ", achieved accel " + fmt(st.achieved_accel)};
}

Verdict solver_sanity() {
  // Full sampling, lambda 0, one unit step.
  const Dims ds{16, 16, 16};
  const auto img = random_complex(ds, 5);
  ReconConfig one;
  one.lambda_abs = 0.0;
  one.l1_steps = 1;
  const auto rec = recon_l1({fft3_centered(img)}, unit_coil(ds), full_sampling_plan(16, 16),
                            MotionTrajectory::zeros(1), one);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    num += std::norm(rec[i] - img[i]);
    den += std::norm(img[i]);
  }
  const double rel = std::sqrt(num / den);

  const Dims d{64, 64, 64};
  const auto truth = make_phantom(PhantomKind::kShepp3d, d);
  const auto coils = make_coil_maps(d, 4);
  const auto plan = generate_plan(64, 64, 3.0, 16, 16, 1.0, 8, 1);
  const auto ksp = corrupt(to_complex(truth), coils, plan, MotionTrajectory::zeros(8));
  const double p_adj = psnr(recon_adjoint(ksp, coils, plan), truth);
  const auto l1 = recon_l1_detailed(ksp, coils, plan, MotionTrajectory::zeros(8), ReconConfig{});
  const double p_l1 = psnr(magnitude(l1.image), truth);
  bool monotone = true;
  for (std::size_t i = 1; i < l1.losses.size(); ++i) monotone = monotone && l1.losses[i] <= l1.losses[i - 1];
  return {rel <= 1e-6 && p_l1 >= p_adj && monotone,
          "one-step rel error " + fmt(rel) + "; shepp3d 64^3 accel 3: L1 " + fmt(p_l1) + " dB vs adjoint " +
              fmt(p_adj) + " dB, loss monotone: " + (monotone ? "yes" : "no")};
}

struct MotionRun {
  bool done = false;
  double total_dc_altopt = 0.0, total_dc_zero = 0.0;
};
MotionRun motion_run;

Verdict motion_recovery() {
  const Dims d{64, 64, 64};
  const auto truth = make_phantom(PhantomKind::kShepp3d, d);
  const auto coils = make_coil_maps(d, 2);
  const auto plan = generate_plan(64, 64, 2.0, 16, 16, 1.0, 8, 3);
  auto traj = MotionTrajectory::zeros(8);
  for (std::size_t s = 4; s < 8; ++s) traj.per_shot[s].trans_vox[0] = 3.0;
  const auto ksp = corrupt(to_complex(truth), coils, plan, traj);
  const ReconConfig cfg;

  const auto zero = recon_l1(ksp, coils, plan, MotionTrajectory::zeros(8), cfg);
  const auto res = altopt(ksp, coils, plan, cfg);

  const auto ref = normalize_percentile(truth);
  const double p_zero = psnr(normalize_percentile(magnitude(zero)), ref);
  const double p_alt = psnr(normalize_percentile(magnitude(res.image)), ref);
  double worst = 0.0;
  for (std::size_t s = 0; s < 8; ++s) {
    const auto& est = res.trajectory.per_shot[s];
    const auto& gt = traj.per_shot[s];
    for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(est.trans_vox[a] - gt.trans_vox[a]));
  }
  const auto dc_zero = dc_loss_per_shot(zero, ksp, coils, plan, MotionTrajectory::zeros(8));
  motion_run.done = true;
  for (double v : res.dc_losses) motion_run.total_dc_altopt += v;
  for (double v : dc_zero) motion_run.total_dc_zero += v;
  return {worst <= 0.2 && p_alt - p_zero >= 6.0,
          "worst translation error " + fmt(worst, 3) + " voxel; PSNR " + fmt(p_alt) + " dB vs uncorrected " +
              fmt(p_zero) + " dB (+" + fmt(p_alt - p_zero, 3) + ")"};
}

Verdict dc_reduction() {
  if (!motion_run.done) return {false, "motion recovery run did not complete"};
  const double ratio = motion_run.total_dc_altopt / motion_run.total_dc_zero;
  return {ratio <= 0.5, "total DC loss " + fmt(motion_run.total_dc_altopt) + " vs zero-init " +
                            fmt(motion_run.total_dc_zero) + " (ratio " + fmt(ratio, 3) + ")"};
}

Verdict severity_ordering() {
  std::vector<NamedVolume> vols;
  for (std::size_t v = 0; v < 5; ++v)
    vols.push_back({"p" + std::to_string(v), make_phantom(PhantomKind::kBlobs, {32, 32, 32}, 11 + v)});
  EvalConfig cfg;
  cfg.methods = {"adjoint"};
  cfg.n_seeds = 2;
  const auto run = run_simulated_eval(vols, cfg, 2024);
  // (volume, seed) -> severity -> metric -> value
  std::map<std::pair<std::string, std::size_t>, std::map<std::string, std::map<std::string, double>>> table;
  for (const auto& r : run.rows) table[{r.volume, r.seed_index}][r.severity][r.metric] = r.value;
  int ordered = 0;
  double mild_psnr = 0, severe_psnr = 0, mild_ap = 0, severe_ap = 0;
  for (auto& [key, sev] : table) {
    const auto& m = sev["mild"];
    const auto& s = sev["severe"];
    if (m.at("psnr") > s.at("psnr") && m.at("ap") < s.at("ap")) ++ordered;
    mild_psnr += m.at("psnr") / 10;
    severe_psnr += s.at("psnr") / 10;
    mild_ap += m.at("ap") / 10;
    severe_ap += s.at("ap") / 10;
  }
  const bool ok = table.size() == 10 && ordered >= 9 && mild_psnr > severe_psnr && mild_ap < severe_ap;
  return {ok, std::to_string(ordered) + "/" + std::to_string(table.size()) + " pairs ordered; mean PSNR " +
                  fmt(mild_psnr) + " vs " + fmt(severe_psnr) + " dB, mean AP " + fmt(mild_ap) + " vs " +
                  fmt(severe_ap)};
}

Verdict bradley_terry() {
  ComparisonRecord r;
  r.item_a = "A";
  r.item_b = "B";
  r.outcomes = {momoc::Outcome::kAWorse, momoc::Outcome::kSimilar};
  r.annotator = "r";
  BtOptions no_reg;
  no_reg.reg_weight = 0.0;
  const auto two = fit_bt(std::vector<ComparisonRecord>{r}, no_reg);
  const double gap = two.beta.at("A") - two.beta.at("B");

  std::mt19937_64 rng(31);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> truth(24);
  for (auto& t : truth) t = 1.5 * n(rng);
  std::vector<ComparisonRecord> recs;
  for (std::size_t i = 0; i < 24; ++i)
    for (std::size_t j = i + 1; j < 24; ++j) {
      const double p = 1.0 / (1.0 + std::exp(-(truth[i] - truth[j])));
      ComparisonRecord c;
      c.item_a = "i" + std::to_string(i);
      c.item_b = "i" + std::to_string(j);
      for (int k = 0; k < 2; ++k) c.outcomes.push_back(u(rng) < p ? momoc::Outcome::kAWorse : momoc::Outcome::kBWorse);
      c.annotator = "synthetic";
      recs.push_back(c);
    }
  const auto fit = fit_bt(recs);
  std::vector<double> fitted;
  for (std::size_t i = 0; i < 24; ++i) fitted.push_back(fit.beta.at("i" + std::to_string(i)));
  const double rho = spearman(fitted, truth);
  return {std::abs(gap - std::log(3.0)) <= 1e-3 && rho >= 0.95 && two.converged && fit.converged,
          "two-item gap " + fmt(gap, 7) + " (ln 3 = " + fmt(std::log(3.0), 7) + "); 24-item Spearman " +
              fmt(rho)};
}

Verdict metric_identities() {
  const Dims d{24, 24, 24};
  const auto ref = make_phantom(PhantomKind::kBlobs, d, 3);
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  check(psnr(ref, ref) == kPsnrCapDb, "PSNR cap");
  RealVolume off = ref;
  for (auto& v : off) v += 0.1;
  check(std::abs(psnr(off, ref) - 20.0) < 1e-9, "PSNR 20 dB");
  check(std::abs(ssim(ref, ref) - 1.0) <= 1e-9, "SSIM(x,x)");
  RealVolume half = ref, zero(d);
  for (auto& v : half) v *= 0.5;
  check(artifact_power(ref, ref) == 0.0, "AP 0");
  check(std::abs(artifact_power(zero, ref) - 1.0) < 1e-12, "AP 1");
  check(std::abs(artifact_power(half, ref) - 0.25) < 1e-12, "AP 0.25");
  const RealVolume flat(d, 0.7);
  check(tenengrad(flat) == 0.0, "TG constant");
  check(average_edge_strength(flat) == 0.0, "AES constant");
  const std::vector<double> x{1, 2, 3, 4, 5}, rev{5, 4, 3, 2, 1};
  check(spearman(x, x) == 1.0, "Spearman +1");
  check(spearman(x, rev) == -1.0, "Spearman -1");
  const std::vector<double> tx{1, 2, 2, 4}, ty{10, 20, 30, 40};
  check(std::abs(spearman(tx, ty) - 4.5 / std::sqrt(4.5 * 5.0)) <= 1e-15, "Spearman ties");
  std::string detail = failed.empty() ? "all 11 identities hold" : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

Verdict dc_thresholding() {
  const ReconConfig cfg;
  bool ok = true;
  std::string detail;
  for (std::size_t bad = 1; bad < 8; ++bad) {
    std::vector<double> losses(8, 0.15);
    for (std::size_t s = 0; s < 8; ++s) losses[s] += 0.05 * double(s % 3);
    losses[bad] = 0.93;
    const auto keep = threshold_shots(losses, cfg);
    std::vector<std::size_t> expected;
    for (std::size_t s = 0; s < 8; ++s)
      if (s != bad) expected.push_back(s);
    ok = ok && keep == expected;
  }
  const auto ex = threshold_shots({0.1, 0.9, 0.69, 0.71}, cfg);
  ok = ok && ex == std::vector<std::size_t>{0, 2};
  detail = "threshold " + fmt(cfg.dc_threshold) + ", bad shot excluded alone in 7/7 placements: " +
           (ok ? "yes" : "no");
  return {ok, detail};
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "momoc_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "cfg.json",
                  R"({"n_volumes":1,"size":16,"n_seeds":1,"n_coils":2,"n_shots":4,"acs":4,)"
                  R"("methods":["adjoint","l1","altopt"],"recon":{"l1_steps":10,"altopt_max_iter":5}})");
  std::string rows[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path out = dir / ("rows" + std::to_string(k) + ".jsonl");
    const std::string cmd = std::string(MOMOC_EXE) + " eval simulated --seed 7 --config " +
                            (dir / "cfg.json").string() + " --out " + out.string();
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "command failed: " + cmd};
    rows[k] = read_text_file(out);
  }
  fs::remove_all(dir);
  std::size_t n = 0;
  for (char c : rows[0]) n += c == '\n';
  return {!rows[0].empty() && rows[0] == rows[1],
          std::to_string(n) + " rows, " + std::to_string(rows[0].size()) + " bytes, identical: " +
              (rows[0] == rows[1] ? "yes" : "no")};
}

struct Criterion {
  std::string name;
  double limit_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"adjoint correctness", 10, adjoint_correctness},
      {"sampling geometry", 1, sampling_geometry},
      {"solver sanity", 60, solver_sanity},
      {"motion recovery", 300, motion_recovery},
      {"severity ordering", 300, severity_ordering},
      {"bradley-terry", 10, bradley_terry},
      {"metric identities", 5, metric_identities},
      {"dc thresholding", 1, dc_thresholding},
      {"end-to-end determinism", 300, determinism},
      {"altopt dc-loss reduction (invariant)", 1, dc_reduction},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << " (" << fmt(secs, 3) << " s, limit " << c.limit_s
              << " s" << (in_time ? "" : ", over time") << "): " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "annotation_service.hpp"
#include "momoc/encoding.hpp"
#include "momoc/eval.hpp"
#include "momoc/io.hpp"
#include "momoc/motion.hpp"
#include "momoc/phantom.hpp"
#include "momoc/pmas.hpp"
#include "momoc/recon.hpp"
#include "momoc/sampling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace momoc {
namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--seed", c.seed, "RNG seed");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

json load_config(const Common& c) {
  if (c.config.empty()) return json::object();
  try {
    auto j = json::parse(read_text_file(c.config));
    if (!j.is_object()) throw Error(ErrorCode::kConfiguration, "config must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, "'" + c.config + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  try {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("config key '") + key + "': " + e.what());
  }
}

// Plan parameters: ny, nz, accel, acs_y, acs_z, pf_z, n_shots.
SamplingPlan plan_from_config(const json& j, std::uint64_t seed, std::size_t ny, std::size_t nz) {
  ny = get_or<std::size_t>(j, "ny", ny);
  nz = get_or<std::size_t>(j, "nz", nz);
  return generate_plan(ny, nz, get_or(j, "accel", 2.0), get_or<std::size_t>(j, "acs_y", 8),
                       get_or<std::size_t>(j, "acs_z", 8), get_or(j, "pf_z", 1.0),
                       get_or<std::size_t>(j, "n_shots", 8), seed);
}

void cmd_mask_gen(const Common& c) {
  const json cfg = load_config(c);
  const SamplingPlan plan = plan_from_config(cfg, c.seed, 64, 64);
  write_text_file(c.out, plan_to_json(plan) + "\n");
  const PlanStats st = plan_stats(plan);
  std::cerr << "sampled " << plan.n_sampled() << " lines, acceleration " << st.achieved_accel << "\n";
}

void cmd_phantom(const Common& c) {
  const json cfg = load_config(c);
  const auto kind = phantom_kind_from_name(get_or<std::string>(cfg, "kind", "shepp3d"));
  const auto dims = get_or<std::vector<std::size_t>>(cfg, "dims", {64, 64, 64});
  if (dims.size() != 3) throw Error(ErrorCode::kConfiguration, "dims must have 3 entries");
  const RealVolume vol = make_phantom(kind, {dims[0], dims[1], dims[2]}, c.seed);
  write_real_volume(c.out, vol, json{{"kind", cfg.value("kind", "shepp3d")}, {"seed", c.seed}}.dump());
}

// Layout of a simulated dataset directory.
struct DataDir {
  fs::path root;
  fs::path kspace() const { return root / "kspace.pmv"; }
  fs::path coils() const { return root / "coils.pmv"; }
  fs::path plan() const { return root / "plan.json"; }
  fs::path trajectory() const { return root / "trajectory.json"; }
  fs::path truth() const { return root / "truth.pmv"; }
};

void cmd_simulate(const Common& c, const std::string& image, const std::string& plan_path,
                  const std::string& traj_path) {
  const json cfg = load_config(c);
  const RealVolume img = read_real_volume(image);
  const Dims d = img.dims();
  const SamplingPlan plan = plan_path.empty() ? plan_from_config(cfg.value("plan", json::object()),
                                                                 c.seed, d.ny, d.nz)
                                              : plan_from_json(read_text_file(plan_path));
  MotionTrajectory traj;
  if (!traj_path.empty()) {
    traj = trajectory_from_json(read_text_file(traj_path));
  } else {
    const auto sev = get_or<std::string>(cfg, "severity", "mild");
    traj = sev == "none" ? MotionTrajectory::zeros(plan.n_shots)
                         : sample_trajectory(SeverityLevel::from_name(sev), plan.n_shots, c.seed);
  }
  const CoilSet coils = make_coil_maps(d, get_or<std::size_t>(cfg, "n_coils", 4));
  const MultiCoilKSpace ksp = corrupt(to_complex(img), coils, plan, traj);
  const DataDir out{c.out};
  write_volumes(out.kspace(), ksp);
  write_volumes(out.coils(), coils.maps);
  write_text_file(out.plan(), plan_to_json(plan) + "\n");
  write_text_file(out.trajectory(), trajectory_to_json(traj) + "\n");
  write_volume(out.truth(), img);
}

struct Dataset {
  MultiCoilKSpace ksp;
  CoilSet coils;
  SamplingPlan plan;
};

Dataset load_dataset(const std::string& dir) {
  const DataDir d{dir};
  Dataset ds;
  ds.ksp = read_volumes(d.kspace());
  ds.coils.maps = read_volumes(d.coils());
  ds.plan = plan_from_json(read_text_file(d.plan()));
  return ds;
}

void cmd_recon(const Common& c, const std::string& method, const std::string& data,
               const std::string& traj_path) {
  const ReconConfig cfg = c.config.empty() ? ReconConfig{} : recon_config_from_json(load_config(c).dump());
  const Dataset ds = load_dataset(data);
  if (method == "adjoint") {
    write_real_volume(c.out, recon_adjoint(ds.ksp, ds.coils, ds.plan));
  } else if (method == "l1") {
    const MotionTrajectory traj = traj_path.empty() ? MotionTrajectory::zeros(ds.plan.n_shots)
                                                    : trajectory_from_json(read_text_file(traj_path));
    write_real_volume(c.out, magnitude(recon_l1(ds.ksp, ds.coils, ds.plan, traj, cfg)));
  } else {
    const AltOptResult r = altopt(ds.ksp, ds.coils, ds.plan, cfg);
    write_real_volume(c.out, magnitude(r.image));
    json info;
    info["trajectory"] = json::parse(trajectory_to_json(r.trajectory));
    info["dc_losses"] = r.dc_losses;
    info["kept_shots"] = r.kept_shots;
    info["iterations"] = r.iterations;
    info["level_iterations"] = r.level_iterations;
    info["early_stopped"] = r.early_stopped;
    fs::path side = c.out;
    side.replace_extension(".altopt.json");
    write_text_file(side, info.dump(2) + "\n");
  }
}

std::vector<NamedVolume> load_named(const std::vector<std::string>& paths) {
  std::vector<NamedVolume> out;
  for (const auto& p : paths) out.push_back({fs::path(p).stem().string(), read_real_volume(p)});
  return out;
}

void cmd_metrics_paired(const Common& c, const std::vector<std::string>& recons,
                        const std::string& ref, const std::string& mask_path) {
  const json cfg = load_config(c);
  if (mask_path.empty()) {
    throw Error(ErrorCode::kInvalidInput, "metrics paired requires --mask <brain mask volume>");
  }
  if (!fs::exists(mask_path)) {
    throw Error(ErrorCode::kIo, "mask file '" + mask_path + "' does not exist");
  }
  PairedEvalOptions opts;
  opts.preprocess.percentile = get_or(cfg, "percentile", 99.9);
  opts.mask_before_registration = get_or(cfg, "mask_before_registration", false);
  opts.register_volumes = get_or(cfg, "register", true);
  const RealVolume mask = read_real_volume(mask_path);
  const auto results = run_paired_eval(load_named(recons), load_named({ref}).front(), &mask, opts);
  std::string text;
  int failures = 0;
  for (const auto& r : results) {
    if (r.error) {
      std::cerr << r.report.recon_id << ": " << *r.error << "\n";
      ++failures;
    }
    for (const auto& row : r.report.to_json_rows()) text += row + "\n";
  }
  write_text_file(c.out, text);
  if (failures > 0) throw Error(ErrorCode::kRegistrationUndefined, "registration failed for some volumes");
}

void cmd_metrics_free(const Common& c, const std::vector<std::string>& inputs,
                      const std::string& mask_path) {
  std::optional<RealVolume> mask;
  if (!mask_path.empty()) mask = read_real_volume(mask_path);
  std::string text;
  for (const auto& v : load_named(inputs)) {
    for (const auto& row : free_metrics(v, mask ? &*mask : nullptr).to_json_rows()) text += row + "\n";
  }
  write_text_file(c.out, text);
}

BtOptions bt_from_config(const json& cfg) {
  BtOptions o;
  o.reg_weight = get_or(cfg, "reg_weight", o.reg_weight);
  o.grad_tol = get_or(cfg, "grad_tol", o.grad_tol);
  o.max_iter = get_or(cfg, "max_iter", o.max_iter);
  return o;
}

void cmd_pmas_fit(const Common& c, const std::string& comparisons) {
  const json cfg = load_config(c);
  const auto records = parse_comparisons_jsonl(read_text_file(comparisons));
  const PmasScores s = fit_bt(records, bt_from_config(cfg));
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
  write_text_file(c.out, scores_to_json(s) + "\n");
  if (cfg.contains("k_mild")) {
    const auto part = severity_partition(s.beta, cfg["k_mild"].get<std::size_t>());
    std::cout << json{{"mild", part.mild}, {"moderate_severe", part.moderate_severe}}.dump() << "\n";
  }
}

void cmd_correlate(const Common& c, const std::string& metrics, const std::string& scores) {
  const auto table = correlate_report(parse_metric_rows(read_text_file(metrics)),
                                      scores_from_json(read_text_file(scores)));
  write_text_file(c.out, correlation_to_json(table) + "\n");
}

void cmd_eval_simulated(const Common& c) {
  const EvalConfig cfg = eval_config_from_json(load_config(c).dump());
  const auto kind = phantom_kind_from_name(cfg.phantom);
  std::vector<NamedVolume> vols;
  for (std::size_t v = 0; v < cfg.n_volumes; ++v) {
    char id[32];
    std::snprintf(id, sizeof id, "vol%02zu", v);
    vols.push_back({id, make_phantom(kind, {cfg.size, cfg.size, cfg.size}, derive_seed(c.seed, v, 0, 0))});
  }
  const EvalRun run = run_simulated_eval(vols, cfg, c.seed);
  write_text_file(c.out, run.rows_jsonl());
  write_text_file(c.out + ".run.json", run.summary_json() + "\n");
  for (const auto& f : run.failures) {
    std::cerr << "failed: " << f.volume << "/" << f.severity << "/s" << f.seed_index << "/"
              << f.method << ": " << f.message << "\n";
  }
}

void cmd_serve(const Common& c, const std::string& volumes, const std::string& host, int port) {
  const json cfg = load_config(c);
  service::AnnotationService svc(service::AnnotationService::load_items(volumes), c.out, c.seed,
                                 bt_from_config(cfg));
  std::cerr << "serving " << svc.n_total() << " pairs on http://" << host << ":" << port << "\n";
  svc.serve(host, port);
}

}  // namespace
}  // namespace momoc

int main(int argc, char** argv) {
  using namespace momoc;
  CLI::App app{"Evaluation toolkit for rigid-motion correction in 3D MRI"};
  app.require_subcommand(1);
  Common common;

  auto* mask = app.add_subcommand("mask", "Sampling masks");
  mask->require_subcommand(1);
  auto* mask_gen = mask->add_subcommand("gen", "Generate a sampling plan (JSON)");
  add_common(mask_gen, common);

  auto* phantom = app.add_subcommand("phantom", "Write a synthetic phantom volume");
  add_common(phantom, common);

  std::string image, plan_path, traj_path, data, ref, mask_path, comparisons, metrics, scores,
      volumes, host = "127.0.0.1";
  std::vector<std::string> inputs;
  int port = 8080;

  auto* simulate = app.add_subcommand("simulate", "Simulate motion-corrupted k-space into a directory");
  add_common(simulate, common);
  simulate->add_option("--image", image, "Ground-truth volume")->required();
  simulate->add_option("--plan", plan_path, "Sampling plan JSON (default: from config)");
  simulate->add_option("--trajectory", traj_path, "Per-shot poses JSON (default: sampled)");

  auto* recon = app.add_subcommand("recon", "Reconstruct a simulated dataset");
  recon->require_subcommand(1);
  std::string method;
  for (const char* m : {"adjoint", "l1", "altopt"}) {
    auto* sub = recon->add_subcommand(m, std::string("Reconstruct with ") + m);
    add_common(sub, common);
    sub->add_option("--data", data, "Dataset directory written by simulate")->required();
    if (std::string(m) == "l1") sub->add_option("--trajectory", traj_path, "Known per-shot poses");
    sub->callback([&method, m] { method = m; });
  }

  auto* metrics_cmd = app.add_subcommand("metrics", "Image quality metrics");
  metrics_cmd->require_subcommand(1);
  auto* paired = metrics_cmd->add_subcommand("paired", "Reference-based metrics after registration");
  add_common(paired, common);
  paired->add_option("--ref", ref, "Reference volume")->required();
  paired->add_option("--mask", mask_path, "Brain mask of the reference");
  paired->add_option("inputs", inputs, "Reconstructions")->required();
  auto* free_cmd = metrics_cmd->add_subcommand("free", "Reference-free metrics");
  add_common(free_cmd, common);
  free_cmd->add_option("--mask", mask_path, "Optional mask");
  free_cmd->add_option("inputs", inputs, "Volumes")->required();

  auto* pmas = app.add_subcommand("pmas", "Perceived motion artifact scores");
  pmas->require_subcommand(1);
  auto* fit = pmas->add_subcommand("fit", "Fit Bradley-Terry scores to a comparisons log");
  add_common(fit, common);
  fit->add_option("--comparisons", comparisons, "Comparisons JSONL")->required();

  auto* correlate = app.add_subcommand("correlate", "Spearman correlation of metrics with scores");
  add_common(correlate, common);
  correlate->add_option("--metrics", metrics, "Metric rows JSONL")->required();
  correlate->add_option("--scores", scores, "Scores JSON")->required();

  auto* eval = app.add_subcommand("eval", "Evaluation protocols");
  eval->require_subcommand(1);
  auto* simulated = eval->add_subcommand("simulated", "Simulated multi-volume protocol");
  add_common(simulated, common);

  auto* serve = app.add_subcommand("serve", "Annotation HTTP service; --out is the comparisons log");
  add_common(serve, common);
  serve->add_option("--volumes", volumes, "Directory of item volumes")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mask_gen->parsed()) cmd_mask_gen(common);
    else if (phantom->parsed()) cmd_phantom(common);
    else if (simulate->parsed()) cmd_simulate(common, image, plan_path, traj_path);
    else if (recon->parsed()) cmd_recon(common, method, data, traj_path);
    else if (paired->parsed()) cmd_metrics_paired(common, inputs, ref, mask_path);
    else if (free_cmd->parsed()) cmd_metrics_free(common, inputs, mask_path);
    else if (fit->parsed()) cmd_pmas_fit(common, comparisons);
    else if (correlate->parsed()) cmd_correlate(common, metrics, scores);
    else if (simulated->parsed()) cmd_eval_simulated(common);
    else if (serve->parsed()) cmd_serve(common, volumes, host, port);
  } catch (const std::exception& e) {
    std::cerr << "momoc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

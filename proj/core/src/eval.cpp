#include "momoc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "momoc/encoding.hpp"
#include "momoc/motion.hpp"
#include "momoc/pmas.hpp"
#include "momoc/registration.hpp"
#include "momoc/sampling.hpp"

namespace momoc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

const std::set<std::string> kMethods{"adjoint", "l1", "altopt"};

RealVolume reconstruct(const std::string& method, const MultiCoilKSpace& ksp, const CoilSet& coils,
                       const SamplingPlan& plan, const ReconConfig& cfg) {
  if (method == "adjoint") return recon_adjoint(ksp, coils, plan);
  if (method == "l1") {
    return magnitude(recon_l1(ksp, coils, plan, MotionTrajectory::zeros(plan.n_shots), cfg));
  }
  return magnitude(altopt(ksp, coils, plan, cfg).image);
}

RealVolume masked(const RealVolume& vol, const RealVolume& mask) {
  RealVolume out = vol;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return out;
}

}  // namespace

void EvalConfig::validate() const {
  if (severities.empty()) throw Error(ErrorCode::kConfiguration, "no severities configured");
  for (const auto& s : severities) SeverityLevel::from_name(s);
  if (n_seeds == 0) throw Error(ErrorCode::kConfiguration, "n_seeds must be positive");
  if (methods.empty()) throw Error(ErrorCode::kConfiguration, "no methods configured");
  for (const auto& m : methods) {
    if (!kMethods.contains(m)) {
      throw Error(ErrorCode::kConfiguration, "unknown method '" + m + "'");
    }
  }
  if (n_coils == 0) throw Error(ErrorCode::kConfiguration, "n_coils must be positive");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw Error(ErrorCode::kConfiguration, "percentile must be in (0, 100]");
  }
  if (size < 16) throw Error(ErrorCode::kConfiguration, "size must be at least 16");
  recon.validate();
}

std::string eval_config_to_json(const EvalConfig& cfg) {
  nlohmann::ordered_json j;
  j["severities"] = cfg.severities;
  j["n_seeds"] = cfg.n_seeds;
  j["methods"] = cfg.methods;
  j["n_coils"] = cfg.n_coils;
  j["n_shots"] = cfg.n_shots;
  j["accel"] = cfg.accel;
  j["acs"] = cfg.acs;
  j["pf_z"] = cfg.pf_z;
  j["percentile"] = cfg.percentile;
  j["phantom"] = cfg.phantom;
  j["n_volumes"] = cfg.n_volumes;
  j["size"] = cfg.size;
  j["recon"] = nlohmann::ordered_json::parse(recon_config_to_json(cfg.recon));
  return j.dump();
}

EvalConfig eval_config_from_json(std::string_view text) {
  EvalConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    auto read = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("severities", cfg.severities);
    read("n_seeds", cfg.n_seeds);
    read("methods", cfg.methods);
    read("n_coils", cfg.n_coils);
    read("n_shots", cfg.n_shots);
    read("accel", cfg.accel);
    read("acs", cfg.acs);
    read("pf_z", cfg.pf_z);
    read("percentile", cfg.percentile);
    read("phantom", cfg.phantom);
    read("n_volumes", cfg.n_volumes);
    read("size", cfg.size);
    if (j.contains("recon")) cfg.recon = recon_config_from_json(j.at("recon").dump());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("malformed eval config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string EvalRow::recon_id() const {
  return volume + "/" + severity + "/s" + std::to_string(seed_index) + "/" + method;
}

std::string EvalRow::to_json() const {
  nlohmann::ordered_json j;
  j["recon_id"] = recon_id();
  j["ref_id"] = volume;
  j["metric"] = metric;
  j["value"] = value;
  j["volume"] = volume;
  j["severity"] = severity;
  j["seed_index"] = seed_index;
  j["motion_seed"] = motion_seed;
  j["method"] = method;
  return j.dump();
}

std::string EvalRun::rows_jsonl() const {
  std::string out;
  for (const auto& r : rows) out += r.to_json() + "\n";
  return out;
}

std::string EvalRun::summary_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["seed"] = seed;
  j["config"] = nlohmann::ordered_json::parse(config_json);
  j["n_rows"] = rows.size();
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : failures) {
    j["failures"].push_back({{"volume", f.volume},
                             {"severity", f.severity},
                             {"seed_index", f.seed_index},
                             {"method", f.method},
                             {"message", f.message}});
  }
  return j.dump(2);
}

std::uint64_t derive_seed(std::uint64_t base, std::size_t volume, std::size_t severity,
                          std::size_t seed_index) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ volume);
  h = splitmix64(h ^ severity);
  return splitmix64(h ^ seed_index);
}

EvalRun run_simulated_eval(const std::vector<NamedVolume>& volumes, const EvalConfig& cfg,
                           std::uint64_t seed) {
  cfg.validate();
  if (volumes.empty()) throw Error(ErrorCode::kInvalidInput, "simulated evaluation needs a volume");
  EvalRun run;
  run.seed = seed;
  run.config_json = eval_config_to_json(cfg);
  run.run_id = "sim-" + std::to_string(seed);

  for (std::size_t v = 0; v < volumes.size(); ++v) {
    const auto& vol = volumes[v];
    const Dims d = vol.image.dims();
    const CoilSet coils = make_coil_maps(d, cfg.n_coils);
    const ComplexVolume img = to_complex(vol.image);
    const RealVolume truth = normalize_percentile(vol.image, cfg.percentile);
    for (std::size_t s = 0; s < cfg.severities.size(); ++s) {
      const SeverityLevel sev = SeverityLevel::from_name(cfg.severities[s]);
      for (std::size_t k = 0; k < cfg.n_seeds; ++k) {
        const std::uint64_t motion_seed = derive_seed(seed, v, s, k);
        auto fail_all = [&](const std::string& msg) {
          for (const auto& m : cfg.methods) run.failures.push_back({vol.id, sev.name, k, m, msg});
        };
        MultiCoilKSpace ksp;
        SamplingPlan plan;
        try {
          plan = generate_plan(d.ny, d.nz, cfg.accel, std::min(cfg.acs, d.ny),
                               std::min(cfg.acs, d.nz), cfg.pf_z, cfg.n_shots, motion_seed);
          const MotionTrajectory traj = sample_trajectory(sev, cfg.n_shots, motion_seed);
          ksp = corrupt(img, coils, plan, traj);
        } catch (const Error& e) {
          fail_all(e.what());
          continue;
        }
        for (const auto& method : cfg.methods) {
          try {
            const RealVolume rec =
                normalize_percentile(reconstruct(method, ksp, coils, plan, cfg.recon), cfg.percentile);
            const std::pair<const char*, double> metrics[] = {
                {"psnr", psnr(rec, truth)},
                {"ssim", ssim(rec, truth)},
                {"ap", artifact_power(rec, truth)},
            };
            for (const auto& [name, value] : metrics) {
              run.rows.push_back({vol.id, sev.name, k, motion_seed, method, name, value});
            }
          } catch (const Error& e) {
            run.failures.push_back({vol.id, sev.name, k, method, e.what()});
          }
        }
      }
    }
  }
  return run;
}

std::vector<PairedResult> run_paired_eval(const std::vector<NamedVolume>& recons,
                                          const NamedVolume& ref, const RealVolume* mask,
                                          const PairedEvalOptions& opts) {
  if (mask == nullptr) {
    throw Error(ErrorCode::kInvalidInput,
                "paired evaluation requires a brain mask of the reference volume");
  }
  require_same_dims(mask->dims(), ref.image.dims(), "mask vs reference");
  require_binary(*mask, "mask");
  std::vector<PairedResult> out;
  for (const auto& rec : recons) {
    require_same_dims(rec.image.dims(), ref.image.dims(), "reconstruction vs reference");
    PairedResult res;
    res.report.recon_id = rec.id;
    res.report.ref_id = ref.id;
    res.report.preprocessing = std::string(opts.register_volumes ? "register, " : "") +
                               (opts.mask_before_registration ? "mask first, " : "") + "mask, p" +
                               std::to_string(opts.preprocess.percentile) + " normalize, clip";
    RealVolume moving = opts.mask_before_registration ? masked(rec.image, *mask) : rec.image;
    const RealVolume fixed = opts.mask_before_registration ? masked(ref.image, *mask) : ref.image;
    if (opts.register_volumes) {
      try {
        res.pose = register_rigid(moving, fixed);
        moving = align_to_fixed(rec.image, res.pose);
      } catch (const Error& e) {
        res.error = std::string("registration failed: ") + e.what();
        out.push_back(std::move(res));
        continue;
      }
    } else {
      moving = rec.image;
    }
    const auto [x, r] = preprocess_pair(moving, ref.image, *mask, opts.preprocess);
    res.report.add("psnr", psnr(x, r, mask));
    res.report.add("ssim", ssim(x, r, mask));
    res.report.add("ap", artifact_power(x, r));
    res.report.add("aes", average_edge_strength(x, mask));
    res.report.add("tg", tenengrad(x, mask));
    out.push_back(std::move(res));
  }
  return out;
}

MetricReport free_metrics(const NamedVolume& vol, const RealVolume* mask) {
  MetricReport rep;
  rep.recon_id = vol.id;
  rep.preprocessing = "p99.9 normalize";
  RealVolume x = normalize_percentile(mask ? masked(vol.image, *mask) : vol.image);
  rep.add("aes", average_edge_strength(x, mask));
  rep.add("tg", tenengrad(x, mask));
  return rep;
}

std::vector<MetricValue> parse_metric_rows(std::string_view jsonl) {
  std::vector<MetricValue> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    const std::size_t end = std::min(jsonl.find('\n', pos), jsonl.size());
    const std::string_view line = jsonl.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("recon_id").get<std::string>(), j.at("metric").get<std::string>(),
                     j.at("value").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidInput,
                  "metric row line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

MetricSense metric_sense(std::string_view metric) {
  if (metric == "psnr" || metric == "ssim" || metric == "aes" || metric == "tg") {
    return MetricSense::kHigherBetter;
  }
  if (metric == "ap") return MetricSense::kLowerBetter;
  return MetricSense::kUnknown;
}

std::vector<CorrelationEntry> correlate_report(const std::vector<MetricValue>& rows,
                                               const std::map<std::string, double>& scores) {
  std::map<std::string, std::map<std::string, double>> by_metric;
  for (const auto& r : rows) {
    if (!by_metric[r.metric].emplace(r.item, r.value).second) {
      throw Error(ErrorCode::kInvalidInput,
                  "item '" + r.item + "' appears twice for metric '" + r.metric + "'");
    }
  }
  std::vector<CorrelationEntry> table;
  for (const auto& [metric, values] : by_metric) {
    std::vector<double> x, y;
    for (const auto& [item, v] : values) {
      const auto it = scores.find(item);
      if (it == scores.end()) continue;
      x.push_back(v);
      y.push_back(it->second);
    }
    if (x.size() < 3) {
      throw Error(ErrorCode::kInvalidInput, "metric '" + metric + "' overlaps the scores in " +
                                                std::to_string(x.size()) + " items, need 3");
    }
    CorrelationEntry e;
    e.metric = metric;
    e.sense = metric_sense(metric);
    e.n_items = x.size();
    try {
      e.rho = spearman(x, y);
      if (e.sense == MetricSense::kHigherBetter) e.agreement = -*e.rho;
      if (e.sense == MetricSense::kLowerBetter) e.agreement = *e.rho;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kUndefinedCorrelation) throw;
    }
    table.push_back(e);
  }
  return table;
}

std::string correlation_to_json(const std::vector<CorrelationEntry>& table) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : table) {
    nlohmann::ordered_json j;
    j["metric"] = e.metric;
    j["sense"] = e.sense == MetricSense::kHigherBetter  ? "higher_better"
                 : e.sense == MetricSense::kLowerBetter ? "lower_better"
                                                        : "unknown";
    j["n_items"] = e.n_items;
    j["rho"] = e.rho ? nlohmann::ordered_json(*e.rho) : nlohmann::ordered_json(nullptr);
    j["agreement"] =
        e.agreement ? nlohmann::ordered_json(*e.agreement) : nlohmann::ordered_json(nullptr);
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace momoc

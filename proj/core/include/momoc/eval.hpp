#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "momoc/metrics.hpp"
#include "momoc/recon.hpp"
#include "momoc/rigid.hpp"
#include "momoc/volume.hpp"

namespace momoc {

// Settings of the simulated protocol. Volumes come from the caller; the
// acquisition is synthesized around them.
struct EvalConfig {
  std::vector<std::string> severities{"mild", "severe"};
  std::size_t n_seeds = 2;
  std::vector<std::string> methods{"adjoint", "l1", "altopt"};

  std::size_t n_coils = 4;
  std::size_t n_shots = 8;
  double accel = 2.0;
  std::size_t acs = 8;
  double pf_z = 1.0;
  double percentile = 99.9;
  ReconConfig recon;

  // Used by `momoc eval simulated` to build its phantom set.
  std::string phantom = "blobs";
  std::size_t n_volumes = 2;
  std::size_t size = 32;

  void validate() const;
};

std::string eval_config_to_json(const EvalConfig& cfg);
// Missing keys keep their defaults; "recon" holds a ReconConfig object.
EvalConfig eval_config_from_json(std::string_view text);

struct NamedVolume {
  std::string id;
  RealVolume image;
};

struct EvalRow {
  std::string volume;
  std::string severity;
  std::size_t seed_index = 0;
  std::uint64_t motion_seed = 0;
  std::string method;
  std::string metric;
  double value = 0.0;

  // "<volume>/<severity>/s<seed_index>/<method>"
  std::string recon_id() const;
  std::string to_json() const;
};

struct EvalFailure {
  std::string volume;
  std::string severity;
  std::size_t seed_index = 0;
  std::string method;
  std::string message;
};

struct EvalRun {
  std::string run_id;
  std::string config_json;
  std::uint64_t seed = 0;
  std::vector<EvalRow> rows;
  std::vector<EvalFailure> failures;

  // One row per line, in generation order.
  std::string rows_jsonl() const;
  // Run id, config snapshot, seeds and failures.
  std::string summary_json() const;
};

// Motion and sampling seeds of one (volume, severity, seed) instance.
std::uint64_t derive_seed(std::uint64_t base, std::size_t volume, std::size_t severity,
                          std::size_t seed_index);

// volume x severity x seed: corrupt, reconstruct with every method, normalize
// both images to their 99.9th percentile and score PSNR, SSIM and AP against
// the ground truth. A failing reconstruction is recorded and skipped.
EvalRun run_simulated_eval(const std::vector<NamedVolume>& volumes, const EvalConfig& cfg,
                           std::uint64_t seed);

struct PairedEvalOptions {
  PreprocessOptions preprocess;
  // Mask both volumes before registering instead of after resampling.
  bool mask_before_registration = false;
  bool register_volumes = true;
};

struct PairedResult {
  MetricReport report;
  RigidParams pose;
  // Set when registration failed; the report is then empty.
  std::optional<std::string> error;
};

// Registers every reconstruction to the reference, resamples, applies the
// mask and percentile normalization, and scores PSNR, SSIM and AP plus AES
// and TG on the reconstruction. A null mask is an error.
std::vector<PairedResult> run_paired_eval(const std::vector<NamedVolume>& recons,
                                          const NamedVolume& ref, const RealVolume* mask,
                                          const PairedEvalOptions& opts = {});

// Reference-free metrics of a single volume.
MetricReport free_metrics(const NamedVolume& vol, const RealVolume* mask = nullptr);

struct MetricValue {
  std::string item;
  std::string metric;
  double value = 0.0;
};

// Reads {recon_id, metric, value} objects, one per line.
std::vector<MetricValue> parse_metric_rows(std::string_view jsonl);

enum class MetricSense { kHigherBetter, kLowerBetter, kUnknown };
MetricSense metric_sense(std::string_view metric);

struct CorrelationEntry {
  std::string metric;
  MetricSense sense = MetricSense::kUnknown;
  std::size_t n_items = 0;
  // Spearman correlation with PMAS (higher PMAS = more artifacts); empty when
  // either side has no rank variance.
  std::optional<double> rho;
  // rho oriented so that positive means the metric agrees with the raters.
  std::optional<double> agreement;
};

// One entry per metric, in name order. Throws when a metric overlaps the
// scores in fewer than 3 items or an item repeats for a metric.
std::vector<CorrelationEntry> correlate_report(const std::vector<MetricValue>& rows,
                                               const std::map<std::string, double>& scores);
std::string correlation_to_json(const std::vector<CorrelationEntry>& table);

}  // namespace momoc

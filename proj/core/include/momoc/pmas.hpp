#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "momoc/error.hpp"

namespace momoc {

// One rater's verdict on a pair (a, b): which one shows worse artifacts.
enum class Outcome { kAWorse, kBWorse, kSimilar };

Outcome outcome_from_string(std::string_view s);
std::string_view to_string(Outcome o);

// p(a > b), "a has more severe artifacts than b", from one or two raters.
double derive_preference(std::span<const Outcome> outcomes);

struct ComparisonRecord {
  std::string item_a;
  std::string item_b;
  std::vector<Outcome> outcomes;
  std::string annotator;
  std::string timestamp;

  double p_a_gt_b() const { return derive_preference(outcomes); }
  void validate() const;
};

// One JSON object per line: {"a", "b", "outcomes", "annotator", "timestamp"}.
std::string comparison_to_json(const ComparisonRecord& r);
ComparisonRecord comparison_from_json(std::string_view line);
// Blank lines are skipped; errors name the offending line number.
std::vector<ComparisonRecord> parse_comparisons_jsonl(std::string_view text);

struct BtOptions {
  double reg_weight = 1e-3;
  double grad_tol = 1e-6;
  std::size_t max_iter = 10000;
};

struct PmasScores {
  // Higher beta means more severe artifacts; mean zero over all items.
  std::map<std::string, double> beta;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t n_components = 0;
  std::vector<std::string> warnings;
};

// Penalized Bradley-Terry maximum likelihood:
//   sum_records p*log s(b_a - b_b) + (1-p)*log s(b_b - b_a) - reg*|b|^2
// by gradient ascent with adaptive step halving. Disconnected comparison
// graphs are fitted per component (each centred) with a warning.
PmasScores fit_bt(std::span<const ComparisonRecord> records, const BtOptions& opts = {});

// JSON object id -> beta.
std::string scores_to_json(const PmasScores& scores);
std::map<std::string, double> scores_from_json(std::string_view text);

// Pearson correlation of average ranks. Needs equal lengths >= 3; throws
// kUndefinedCorrelation when either ranking is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct SeverityPartition {
  std::vector<std::string> mild;
  std::vector<std::string> moderate_severe;
};

// The k_mild lowest-beta items are mild; ties break by identifier.
SeverityPartition severity_partition(const std::map<std::string, double>& beta,
                                     std::size_t k_mild);

}  // namespace momoc

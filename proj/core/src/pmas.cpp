#include "momoc/pmas.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "momoc/error.hpp"

namespace momoc {
namespace {

// log(sigmoid(d)) without overflow.
double log_sigmoid(double d) { return d >= 0.0 ? -std::log1p(std::exp(-d)) : d - std::log1p(std::exp(d)); }
double sigmoid(double d) {
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

struct Edge {
  std::size_t a;
  std::size_t b;
  double p;
};

class Components {
 public:
  explicit Components(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void join(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

double objective(const std::vector<Edge>& edges, const std::vector<double>& beta, double reg) {
  double f = 0.0;
  for (const auto& e : edges) {
    const double d = beta[e.a] - beta[e.b];
    f += e.p * log_sigmoid(d) + (1.0 - e.p) * log_sigmoid(-d);
  }
  for (double b : beta) f -= reg * b * b;
  return f;
}

std::vector<double> gradient(const std::vector<Edge>& edges, const std::vector<double>& beta,
                             double reg) {
  std::vector<double> g(beta.size(), 0.0);
  for (const auto& e : edges) {
    const double r = e.p - sigmoid(beta[e.a] - beta[e.b]);
    g[e.a] += r;
    g[e.b] -= r;
  }
  for (std::size_t i = 0; i < beta.size(); ++i) g[i] -= 2.0 * reg * beta[i];
  return g;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

Outcome outcome_from_string(std::string_view s) {
  if (s == "a_worse") return Outcome::kAWorse;
  if (s == "b_worse") return Outcome::kBWorse;
  if (s == "similar") return Outcome::kSimilar;
  throw Error(ErrorCode::kInvalidInput, "unknown outcome '" + std::string(s) + "'");
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kAWorse:
      return "a_worse";
    case Outcome::kBWorse:
      return "b_worse";
    default:
      return "similar";
  }
}

double derive_preference(std::span<const Outcome> outcomes) {
  if (outcomes.empty() || outcomes.size() > 2) {
    throw Error(ErrorCode::kInvalidInput, "a comparison needs one or two rater outcomes, got " +
                                              std::to_string(outcomes.size()));
  }
  if (outcomes.size() == 1) {
    if (outcomes[0] == Outcome::kAWorse) return 1.0;
    if (outcomes[0] == Outcome::kBWorse) return 0.0;
    return 0.5;
  }
  const auto a = std::count(outcomes.begin(), outcomes.end(), Outcome::kAWorse);
  const auto b = std::count(outcomes.begin(), outcomes.end(), Outcome::kBWorse);
  if (a == 2) return 1.0;
  if (b == 2) return 0.0;
  if (a == 1 && b == 0) return 0.75;
  if (b == 1 && a == 0) return 0.25;
  return 0.5;  // both similar, or the raters disagree
}

void ComparisonRecord::validate() const {
  if (item_a.empty() || item_b.empty()) {
    throw Error(ErrorCode::kInvalidInput, "comparison item ids must be non-empty");
  }
  if (item_a == item_b) {
    throw Error(ErrorCode::kInvalidInput, "comparison of item '" + item_a + "' with itself");
  }
  derive_preference(outcomes);
}

std::string comparison_to_json(const ComparisonRecord& r) {
  nlohmann::json j;
  j["a"] = r.item_a;
  j["b"] = r.item_b;
  j["outcomes"] = nlohmann::json::array();
  for (Outcome o : r.outcomes) j["outcomes"].push_back(std::string(to_string(o)));
  j["annotator"] = r.annotator;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

ComparisonRecord comparison_from_json(std::string_view line) {
  ComparisonRecord r;
  try {
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidInput, "comparison must be a JSON object");
    r.item_a = j.at("a").get<std::string>();
    r.item_b = j.at("b").get<std::string>();
    for (const auto& o : j.at("outcomes")) r.outcomes.push_back(outcome_from_string(o.get<std::string>()));
    if (j.contains("annotator")) r.annotator = j["annotator"].get<std::string>();
    if (j.contains("timestamp")) r.timestamp = j["timestamp"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("malformed comparison: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<ComparisonRecord> parse_comparisons_jsonl(std::string_view text) {
  std::vector<ComparisonRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(comparison_from_json(line));
      } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    pos = end + 1;
  }
  return out;
}

PmasScores fit_bt(std::span<const ComparisonRecord> records, const BtOptions& opts) {
  if (!(opts.reg_weight >= 0.0)) {
    throw Error(ErrorCode::kConfiguration, "reg_weight must be >= 0");
  }
  PmasScores out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    r.validate();
    index.emplace(r.item_a, 0);
    index.emplace(r.item_b, 0);
  }
  std::vector<std::string> ids;
  for (auto& [id, i] : index) {
    i = ids.size();
    ids.push_back(id);
  }
  const std::size_t n = ids.size();
  std::vector<Edge> edges;
  Components comps(n);
  for (const auto& r : records) {
    edges.push_back({index[r.item_a], index[r.item_b], r.p_a_gt_b()});
    comps.join(index[r.item_a], index[r.item_b]);
  }
  std::vector<std::size_t> root(n);
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[comps.find(i)].push_back(i);
  out.n_components = members.size();
  if (out.n_components > 1) {
    out.warnings.push_back("comparison graph has " + std::to_string(out.n_components) +
                           " components; scores are only comparable within a component");
  }

  std::vector<double> beta(n, 0.0);
  double f = objective(edges, beta, opts.reg_weight);
  double step = 1.0;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    out.iterations = it;
    const auto g = gradient(edges, beta, opts.reg_weight);
    if (max_abs(g) < opts.grad_tol) {
      out.converged = true;
      break;
    }
    // Halve until the objective does not decrease; grow after a success.
    for (int tries = 0; tries < 60; ++tries) {
      std::vector<double> trial(n);
      for (std::size_t i = 0; i < n; ++i) trial[i] = beta[i] + step * g[i];
      const double ft = objective(edges, trial, opts.reg_weight);
      if (ft >= f) {
        beta = std::move(trial);
        f = ft;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    out.iterations = it + 1;
  }
  if (!out.converged) {
    out.warnings.push_back("Bradley-Terry fit stopped after " + std::to_string(out.iterations) +
                           " iterations without reaching the gradient tolerance");
  }

  for (const auto& [r, list] : members) {
    double mean = 0.0;
    for (std::size_t i : list) mean += beta[i];
    mean /= static_cast<double>(list.size());
    for (std::size_t i : list) beta[i] -= mean;
  }
  for (std::size_t i = 0; i < n; ++i) out.beta[ids[i]] = beta[i];
  return out;
}

std::string scores_to_json(const PmasScores& scores) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, b] : scores.beta) j[id] = b;
  return j.dump(2);
}

std::map<std::string, double> scores_from_json(std::string_view text) {
  std::map<std::string, double> out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidInput, "scores must be a JSON object");
    // Accept both a bare id -> beta map and the service's {"scores": {...}} shape.
    const auto& m = j.contains("scores") && j["scores"].is_object() ? j["scores"] : j;
    for (const auto& [id, v] : m.items()) out[id] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("malformed scores: ") + e.what());
  }
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidInput, "spearman inputs differ in length");
  }
  if (x.size() < 3) throw Error(ErrorCode::kInvalidInput, "spearman needs at least 3 pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::kInvalidInput, "spearman inputs must be finite");
    }
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kUndefinedCorrelation, "spearman correlation of a constant ranking");
  }
  return sxy / std::sqrt(sxx * syy);
}

SeverityPartition severity_partition(const std::map<std::string, double>& beta,
                                     std::size_t k_mild) {
  if (k_mild > beta.size()) {
    throw Error(ErrorCode::kInvalidInput, "k_mild exceeds the number of scored items");
  }
  std::vector<std::pair<double, std::string>> sorted;
  for (const auto& [id, b] : beta) sorted.emplace_back(b, id);
  std::sort(sorted.begin(), sorted.end());
  SeverityPartition out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    (i < k_mild ? out.mild : out.moderate_severe).push_back(sorted[i].second);
  }
  return out;
}

}  // namespace momoc

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "momoc/pmas.hpp"

namespace momoc {
namespace {

using O = Outcome;

ComparisonRecord rec(std::string a, std::string b, std::vector<O> o) {
  ComparisonRecord r;
  r.item_a = std::move(a);
  r.item_b = std::move(b);
  r.outcomes = std::move(o);
  return r;
}

// Record whose derived preference is p (p in {0, .25, .5, .75, 1}).
ComparisonRecord with_p(std::string a, std::string b, double p) {
  if (p == 1.0) return rec(a, b, {O::kAWorse, O::kAWorse});
  if (p == 0.75) return rec(a, b, {O::kAWorse, O::kSimilar});
  if (p == 0.5) return rec(a, b, {O::kSimilar, O::kSimilar});
  if (p == 0.25) return rec(a, b, {O::kBWorse, O::kSimilar});
  return rec(a, b, {O::kBWorse, O::kBWorse});
}

double sum_beta(const PmasScores& s) {
  double t = 0;
  for (const auto& [id, b] : s.beta) t += b;
  return t;
}

TEST(Preference, TwoRaterRule) {
  auto p = [](std::vector<O> o) { return derive_preference(o); };
  EXPECT_EQ(p({O::kAWorse, O::kAWorse}), 1.0);
  EXPECT_EQ(p({O::kBWorse, O::kBWorse}), 0.0);
  EXPECT_EQ(p({O::kAWorse, O::kSimilar}), 0.75);
  EXPECT_EQ(p({O::kSimilar, O::kAWorse}), 0.75);
  EXPECT_EQ(p({O::kBWorse, O::kSimilar}), 0.25);
  EXPECT_EQ(p({O::kSimilar, O::kSimilar}), 0.5);
  EXPECT_EQ(p({O::kAWorse, O::kBWorse}), 0.5);
}

TEST(Preference, SingleRaterAndErrors) {
  auto p = [](std::vector<O> o) { return derive_preference(o); };
  EXPECT_EQ(p({O::kAWorse}), 1.0);
  EXPECT_EQ(p({O::kBWorse}), 0.0);
  EXPECT_EQ(p({O::kSimilar}), 0.5);
  EXPECT_THROW(p({}), Error);
  EXPECT_THROW(p({O::kSimilar, O::kSimilar, O::kSimilar}), Error);
  EXPECT_THROW(outcome_from_string("worse"), Error);
  EXPECT_EQ(outcome_from_string(to_string(O::kBWorse)), O::kBWorse);
}

TEST(BradleyTerry, TwoItemClosedForm) {
  BtOptions o;
  o.reg_weight = 0.0;
  const std::vector<ComparisonRecord> r{with_p("A", "B", 0.75)};
  const auto s = fit_bt(r, o);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.beta.at("A") - s.beta.at("B"), std::log(3.0), 1e-3);
  EXPECT_NEAR(s.beta.at("A"), 0.5493, 1e-3);
  EXPECT_NEAR(s.beta.at("B"), -0.5493, 1e-3);
}

TEST(BradleyTerry, AllTiesGiveZero) {
  std::vector<ComparisonRecord> r;
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) r.push_back(with_p(ids[i], ids[j], 0.5));
  for (const auto& [id, b] : fit_bt(r).beta) EXPECT_NEAR(b, 0.0, 1e-9);
}

TEST(BradleyTerry, SyntheticRoundRobinRecoversOrder) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> truth(24);
  for (auto& t : truth) t = 1.5 * n(rng);
  std::vector<ComparisonRecord> r;
  auto id = [](std::size_t i) { return "item" + std::to_string(100 + i); };
  for (std::size_t i = 0; i < 24; ++i)
    for (std::size_t j = i + 1; j < 24; ++j) {
      const double p = 1.0 / (1.0 + std::exp(-(truth[i] - truth[j])));
      std::vector<O> o;
      for (int k = 0; k < 2; ++k) o.push_back(u(rng) < p ? O::kAWorse : O::kBWorse);
      r.push_back(rec(id(i), id(j), o));
    }
  const auto s = fit_bt(r);
  std::vector<double> fitted;
  for (std::size_t i = 0; i < 24; ++i) fitted.push_back(s.beta.at(id(i)));
  EXPECT_GE(spearman(fitted, truth), 0.95);
  EXPECT_NEAR(sum_beta(s), 0.0, 1e-9);
}

TEST(BradleyTerry, AntisymmetryAndGauge) {
  const std::vector<ComparisonRecord> r{with_p("a", "b", 0.75), with_p("b", "c", 1.0), with_p("a", "c", 0.25),
                                        with_p("c", "d", 0.5), with_p("d", "a", 0.0)};
  std::vector<ComparisonRecord> flipped;
  for (const auto& x : r) flipped.push_back(with_p(x.item_b, x.item_a, 1.0 - x.p_a_gt_b()));
  const auto s1 = fit_bt(r), s2 = fit_bt(flipped);
  for (const auto& [id, b] : s1.beta) EXPECT_NEAR(b, s2.beta.at(id), 1e-6);
  EXPECT_NEAR(sum_beta(s1), 0.0, 1e-9);
}

TEST(BradleyTerry, ChainIsMonotone) {
  std::vector<ComparisonRecord> r;
  // p = 0.9 from ten single-rater records: nine "A worse", one "B worse".
  for (int k = 0; k < 10; ++k) {
    r.push_back(rec("A", "B", {k < 9 ? O::kAWorse : O::kBWorse}));
    r.push_back(rec("B", "C", {k < 9 ? O::kAWorse : O::kBWorse}));
  }
  const auto s = fit_bt(r);
  EXPECT_GT(s.beta.at("A"), s.beta.at("B"));
  EXPECT_GT(s.beta.at("B"), s.beta.at("C"));
}

TEST(BradleyTerry, DeterministicOutcomesStayFinite) {
  const std::vector<ComparisonRecord> r{with_p("x", "y", 1.0)};
  const auto s = fit_bt(r);
  EXPECT_TRUE(s.converged);
  EXPECT_TRUE(std::isfinite(s.beta.at("x")));
  EXPECT_GT(s.beta.at("x"), s.beta.at("y"));
}

TEST(BradleyTerry, DisconnectedGraphWarnsAndCentresComponents) {
  const std::vector<ComparisonRecord> r{with_p("a", "b", 0.75), with_p("c", "d", 1.0), with_p("d", "e", 0.25)};
  const auto s = fit_bt(r);
  EXPECT_EQ(s.n_components, 2u);
  EXPECT_FALSE(s.warnings.empty());
  EXPECT_NEAR(s.beta.at("a") + s.beta.at("b"), 0.0, 1e-9);
  EXPECT_NEAR(s.beta.at("c") + s.beta.at("d") + s.beta.at("e"), 0.0, 1e-9);
}

TEST(BradleyTerry, NonConvergenceIsFlagged) {
  BtOptions o;
  o.reg_weight = 0.0;
  o.max_iter = 5;
  const auto s = fit_bt(std::vector<ComparisonRecord>{with_p("x", "y", 1.0)}, o);
  EXPECT_FALSE(s.converged);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(BradleyTerry, RejectsSelfComparison) {
  EXPECT_THROW(fit_bt(std::vector<ComparisonRecord>{with_p("x", "x", 1.0)}), Error);
}

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(spearman(x, x), 1.0);
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, rev), -1.0);
}

TEST(Spearman, TiesMatchBruteForce) {
  const std::vector<double> x{1, 2, 2, 4}, y{10, 20, 30, 40};
  const std::vector<double> rx{1, 2.5, 2.5, 4}, ry{1, 2, 3, 4};
  const double mx = 2.5, my = 2.5;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  EXPECT_DOUBLE_EQ(spearman(x, y), sxy / std::sqrt(sxx * syy));
}

TEST(Spearman, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  std::vector<double> x(30), y(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = n(rng);
    y[i] = x[i] + n(rng);
  }
  std::vector<double> tx(30), ty(30);
  for (int i = 0; i < 30; ++i) {
    tx[i] = std::exp(x[i]);
    ty[i] = std::pow(y[i], 3) - 7;
  }
  EXPECT_NEAR(spearman(x, y), spearman(tx, ty), 1e-12);
}

TEST(Spearman, Errors) {
  const std::vector<double> a{1, 2, 3}, c{4, 4, 4}, s{1, 2};
  try {
    spearman(a, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedCorrelation);
  }
  EXPECT_THROW(spearman(s, s), Error);
  EXPECT_THROW(spearman(a, s), Error);
}

TEST(SeverityPartition, PublishedScoresGiveMildSet) {
  const std::map<std::string, double> beta{
      {"S2_1", 2.417}, {"S8_3", 2.230}, {"S6_3", 2.197}, {"S8_1", 2.189}, {"S1_1", 1.828},
      {"S5_1", 1.782}, {"S3_1", 1.673}, {"S4_3", 1.552}, {"S6_1", 1.405}, {"S8_2", 1.400},
      {"S2_2", 1.102}, {"S6_2", 1.041}, {"S5_3", 0.867}, {"S7_2", 0.813}, {"S4_1", 0.808},
      {"S3_2", 0.771}, {"S2_3", 0.485}, {"S5_2", 0.356}, {"S4_2", 0.346}, {"S1_3", -0.008},
      {"S3_3", -0.057}, {"S7_1", -0.156}, {"S7_3", -0.231}, {"S1_2", -0.443}};
  const auto part = severity_partition(beta, 8);
  const std::set<std::string> mild(part.mild.begin(), part.mild.end());
  EXPECT_EQ(mild, (std::set<std::string>{"S1_2", "S7_3", "S7_1", "S3_3", "S1_3", "S4_2", "S5_2", "S2_3"}));
  EXPECT_EQ(part.moderate_severe.size(), 16u);
  EXPECT_TRUE(severity_partition(beta, 0).mild.empty());
  EXPECT_EQ(severity_partition(beta, 24).mild.size(), 24u);
  EXPECT_THROW(severity_partition(beta, 25), Error);
}

TEST(SeverityPartition, TiesBrokenById) {
  const std::map<std::string, double> beta{{"b", 0.0}, {"a", 0.0}, {"c", 1.0}};
  EXPECT_EQ(severity_partition(beta, 1).mild, std::vector<std::string>{"a"});
}

TEST(ComparisonJson, RoundTripAndLineErrors) {
  auto r = rec("s1", "s2", {O::kAWorse, O::kSimilar});
  r.annotator = "ann";
  r.timestamp = "2024-01-01T00:00:00Z";
  const auto back = comparison_from_json(comparison_to_json(r));
  EXPECT_EQ(back.item_a, "s1");
  EXPECT_EQ(back.outcomes, r.outcomes);
  EXPECT_EQ(back.annotator, "ann");
  EXPECT_EQ(back.p_a_gt_b(), 0.75);

  const std::string text = comparison_to_json(r) + "\n\n" + comparison_to_json(r) + "\n";
  EXPECT_EQ(parse_comparisons_jsonl(text).size(), 2u);
  try {
    parse_comparisons_jsonl(comparison_to_json(r) + "\n{\"a\":\"x\"}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(comparison_from_json(R"({"a":"x","b":"x","outcomes":["similar"]})"), Error);
  EXPECT_THROW(comparison_from_json(R"({"a":"x","b":"y","outcomes":["nope"]})"), Error);
}

TEST(ScoresJson, RoundTrip) {
  PmasScores s;
  s.beta = {{"a", 0.125}, {"b", -0.125}};
  EXPECT_EQ(scores_from_json(scores_to_json(s)), s.beta);
  EXPECT_EQ(scores_from_json(R"({"scores":{"a":1.5},"n_comparisons":3})").at("a"), 1.5);
  EXPECT_THROW(scores_from_json("[1,2]"), Error);
}

}  // namespace
}  // namespace momoc

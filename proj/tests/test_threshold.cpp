#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pgu/error.hpp"
#include "pgu/random.hpp"
#include "pgu/threshold_opt.hpp"
#include "support.hpp"

using namespace pgu;

namespace {

std::vector<int> repeat(std::initializer_list<std::pair<int, int>> runs) {
  std::vector<int> v;
  for (auto [label, n] : runs) v.insert(v.end(), static_cast<std::size_t>(n), label);
  return v;
}

}  // namespace

TEST_CASE("score of the hand-computed two-class example") {
  // Truth A x10 then B x10; A: 8 right, 2 -> B; B: 6 right, 4 -> A.
  const auto truth = repeat({{0, 10}, {1, 10}});
  const auto pred = repeat({{0, 8}, {1, 2}, {1, 6}, {0, 4}});
  const double f1 = 0.5 * (16.0 / 22.0 + 12.0 / 18.0);
  const double gm = std::sqrt(0.8 * 0.6);
  const double s = classification_score(truth, pred, {}, 2);
  CHECK(s == doctest::Approx(0.5 * f1 + 0.5 * gm).epsilon(1e-12));
  CHECK(s == doctest::Approx(0.6949).epsilon(1e-4));
}

TEST_CASE("perfect predictions and missed classes") {
  const std::vector<int> t{0, 1, 2, 2};
  CHECK(classification_score(t, t, {}, 3) == 1.0);
  const std::vector<int> p{0, 1, 1, 1};
  const double s = classification_score(t, p, {0.5, 0.5}, 3);
  // Class 2 never predicted: G-Mean 0, score = w1 * macro-F1 over classes {0, 1, 2}.
  const double f1 = (1.0 + 2.0 / 4.0 + 0.0) / 3.0;
  CHECK(s == doctest::Approx(0.5 * f1));
  CHECK(classification_score(t, p, {0.0, 1.0}, 3) == 0.0);
}

TEST_CASE("score is permutation invariant and bounded") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    std::vector<int> t(40), p(40);
    for (std::size_t j = 0; j < 40; ++j) {
      t[j] = static_cast<int>(rng() % 4);
      p[j] = rng() % 3 == 0 ? static_cast<int>(rng() % 4) : t[j];
    }
    const double s = classification_score(t, p, {}, 4);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    const auto order = random_permutation(40, rng);
    std::vector<int> t2, p2;
    for (auto k : order) {
      t2.push_back(t[k]);
      p2.push_back(p[k]);
    }
    CHECK(classification_score(t2, p2, {}, 4) == doctest::Approx(s).epsilon(1e-14));
    CHECK((s == 1.0) == (t == p));
  }
}

TEST_CASE("score input validation") {
  CHECK_THROWS_AS(classification_score(std::vector<int>{}, std::vector<int>{}, {}, 2), DataError);
  CHECK_THROWS_AS(classification_score(std::vector<int>{0}, std::vector<int>{0, 1}, {}, 2), DataError);
  CHECK_THROWS_AS((ScoreWeights{0.7, 0.7}.validate()), ConfigError);
}

namespace {

struct Planted {
  std::vector<double> g1, g2;
  std::vector<int> labels;
  std::size_t n_real = 50, n_obs = 500;
};

/// Observations truncated at +0.3 on G1; each realization is the truth plus noise.
Planted planted(double truth_threshold, std::uint64_t seed) {
  Planted p;
  Rng rng(seed);
  std::vector<double> t1(p.n_obs);
  for (std::size_t o = 0; o < p.n_obs; ++o) {
    t1[o] = standard_normal(rng);
    p.labels.push_back(t1[o] < truth_threshold ? 0 : 1);
  }
  for (std::size_t r = 0; r < p.n_real; ++r)
    for (std::size_t o = 0; o < p.n_obs; ++o) {
      p.g1.push_back(t1[o] + 0.1 * standard_normal(rng));
      p.g2.push_back(standard_normal(rng));
    }
  return p;
}

}  // namespace

TEST_CASE("planted threshold is recovered") {
  const auto p = planted(0.3, 17);
  const auto rule = thresholds_from_proportions(testing::split_g1(), std::vector<double>{0.5, 0.5});
  const auto space = ThresholdSearchSpace::around(rule, 0.6, 200, 3);
  const auto res = optimise_thresholds(p.g1, p.g2, p.n_real, p.labels, rule, space, {});
  CHECK(std::abs(res.rule.thresholds()[0] - 0.3) <= 0.1);
  CHECK(res.best_score >= res.prior_score);
  CHECK(res.trials.size() == 200);
  CHECK(res.trials[0].thresholds == rule.thresholds());
}

TEST_CASE("budget of one returns the prior") {
  const auto p = planted(0.3, 2);
  const auto rule = thresholds_from_proportions(testing::split_g1(), std::vector<double>{0.5, 0.5});
  const auto res = optimise_thresholds(p.g1, p.g2, p.n_real, p.labels, rule, ThresholdSearchSpace::around(rule, 0.6, 1, 3), {});
  CHECK(res.rule.thresholds() == rule.thresholds());
  CHECK(res.best_score == res.prior_score);
}

TEST_CASE("perfect prior is kept") {
  const auto p = planted(0.0, 5);
  const auto rule = thresholds_from_proportions(testing::split_g1(), std::vector<double>{0.5, 0.5});
  std::vector<double> g1(p.g1.size());
  for (std::size_t r = 0; r < p.n_real; ++r)
    for (std::size_t o = 0; o < p.n_obs; ++o) g1[r * p.n_obs + o] = p.labels[o] == 0 ? -1.0 : 1.0;
  const auto res = optimise_thresholds(g1, p.g2, p.n_real, p.labels, rule, ThresholdSearchSpace::around(rule, 0.6, 50, 3), {});
  CHECK(res.prior_score == 1.0);
  CHECK(res.rule.thresholds() == rule.thresholds());
}

TEST_CASE("search results are thread independent and reject spaces without the prior") {
  const auto p = planted(0.3, 9);
  const auto rule = thresholds_from_proportions(testing::split_g1(), std::vector<double>{0.5, 0.5});
  const auto space = ThresholdSearchSpace::around(rule, 0.6, 64, 11);
  const auto a = optimise_thresholds(p.g1, p.g2, p.n_real, p.labels, rule, space, {}, 1);
  const auto b = optimise_thresholds(p.g1, p.g2, p.n_real, p.labels, rule, space, {}, 4);
  CHECK(a.rule.thresholds() == b.rule.thresholds());
  for (std::size_t t = 0; t < a.trials.size(); ++t) CHECK(a.trials[t].thresholds == b.trials[t].thresholds);
  ThresholdSearchSpace off = space;
  off.lower = {0.5};
  off.upper = {1.0};
  CHECK_THROWS_AS(optimise_thresholds(p.g1, p.g2, p.n_real, p.labels, rule, off, {}), ConfigError);
}

TEST_CASE("raising the small-domain boundary trades its recall against the neighbour's") {
  // DOLT (small) sits below HEM on G1; thresholds: DOLT | HEM at the 10% quantile.
  const auto topo = testing::split_g1({"DOLT", "HEM"});
  const auto rule = thresholds_from_proportions(topo, std::vector<double>{0.1, 0.9});
  Rng rng(21);
  const std::size_t n_obs = 2000, n_real = 20;
  std::vector<int> labels;
  std::vector<double> truth(n_obs), g1, g2;
  for (std::size_t o = 0; o < n_obs; ++o) {
    truth[o] = standard_normal(rng);
    labels.push_back(truth[o] < rule.thresholds()[0] ? 0 : 1);
  }
  for (std::size_t r = 0; r < n_real; ++r)
    for (std::size_t o = 0; o < n_obs; ++o) {
      g1.push_back(truth[o] + 0.5 * standard_normal(rng));
      g2.push_back(0.0);
    }
  const auto recalls = [&](const TruncationRule& rl) {
    std::vector<int> pred(n_obs);
    for (std::size_t o = 0; o < n_obs; ++o) {
      int votes = 0;
      for (std::size_t r = 0; r < n_real; ++r) votes += rl.truncate(g1[r * n_obs + o], 0.0) == 0;
      pred[o] = 2 * votes >= static_cast<int>(n_real) ? 0 : 1;
    }
    double hit[2] = {0, 0}, tot[2] = {0, 0};
    for (std::size_t o = 0; o < n_obs; ++o) {
      tot[labels[o]] += 1;
      hit[labels[o]] += pred[o] == labels[o];
    }
    return std::pair{hit[0] / tot[0], hit[1] / tot[1]};
  };
  const auto base = recalls(rule);
  const auto raised = recalls(rule.with_thresholds({rule.thresholds()[0] * 0.7}));
  CHECK(raised.first > base.first);
  CHECK(raised.second < base.second);
}

TEST_CASE("trials csv is written") {
  const auto p = planted(0.3, 1);
  const auto rule = thresholds_from_proportions(testing::split_g1(), std::vector<double>{0.5, 0.5});
  const auto res = optimise_thresholds(p.g1, p.g2, p.n_real, p.labels, rule, ThresholdSearchSpace::around(rule, 0.6, 5, 1), {});
  const auto dir = testing::temp_dir("trials");
  write_trials_csv(dir / "t.csv", rule, res);
  CHECK(std::filesystem::file_size(dir / "t.csv") > 20);
}

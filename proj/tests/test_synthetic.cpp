#include <doctest.h>

#include <cmath>
#include <set>

#include "pgu/config.hpp"
#include "pgu/error.hpp"
#include "pgu/synthetic.hpp"
#include "support.hpp"

using namespace pgu;

TEST_CASE("truth is deterministic and differs from the prior parameters") {
  const auto cfg = parse_config(testing::kSmallConfig);
  const auto a = generate_truth(cfg), b = generate_truth(cfg);
  CHECK(a.domains == b.domains);
  CHECK(a.grades == b.grades);
  CHECK_FALSE(a.rule == cfg.rule());
  auto same = cfg;
  same.synthetic->variograms = cfg.variograms;
  same.synthetic->threshold_shift.clear();
  CHECK_THROWS_AS(generate_truth(same), ConfigError);
}

TEST_CASE("truth proportions and grade means on the 100x80 grid") {
  const auto cfg = load_config(std::filesystem::path(PGU_SOURCE_DIR) / "configs" / "synthetic.json");
  const auto t = generate_truth(cfg);
  const auto expected = rule_proportions(t.rule);
  std::vector<double> freq(cfg.domains().size(), 0.0);
  for (int d : t.domains) freq[static_cast<std::size_t>(d)] += 1.0 / t.domains.size();
  for (std::size_t d = 0; d < freq.size(); ++d) {
    CAPTURE(cfg.domains()[d]);
    // A single smooth realization: the spread of block proportions is wide.
    CHECK(std::abs(freq[d] - expected[d]) < 0.03);
  }
  for (std::size_t d = 0; d < freq.size(); ++d) {
    for (std::size_t v = 0; v < t.variables.size(); ++v) {
      double s = 0.0;
      std::size_t n = 0;
      for (std::size_t b = 0; b < t.domains.size(); ++b)
        if (t.domains[b] == static_cast<int>(d)) {
          s += t.grades[v][b];
          ++n;
        }
      if (n == 0) continue;
      const double target = cfg.synthetic->grade_targets[d].mean[v];
      CAPTURE(cfg.domains()[d]);
      CAPTURE(t.variables[v]);
      CHECK(std::abs(s / n - target) <= 0.10 * target);
    }
  }
}

TEST_CASE("sampling examples") {
  const auto cfg = parse_config(testing::kSmallConfig);
  const auto t = generate_truth(cfg);
  const auto all = sample_observations(t, cfg.domains(), 1.0, 1, 4);
  CHECK(all.size() == t.grid.size());
  std::set<std::size_t> blocks;
  for (const auto& r : all.records) blocks.insert(r.block);
  CHECK(blocks.size() == t.grid.size());

  const auto obs = sample_observations(t, cfg.domains(), 0.25, 4, 4);
  CHECK(obs.size() == 180);
  CHECK(obs.n_periods() == 4);
  std::size_t total = 0;
  for (int p = 0; p < 4; ++p) {
    CHECK(obs.period(p).size() > 0);
    total += obs.period(p).size();
  }
  CHECK(total == obs.size());
  for (const auto& r : obs.records) {
    CHECK(*r.domain == t.domains[r.block]);
    CHECK((*r.grades)[0] == t.grades[0][r.block]);
  }
  const auto obs2 = sample_observations(t, cfg.domains(), 0.25, 4, 4);
  CHECK(obs2.records.size() == obs.records.size());
  for (std::size_t i = 0; i < obs.size(); ++i) CHECK(obs.records[i].block == obs2.records[i].block);
  CHECK_THROWS(sample_observations(t, cfg.domains(), 0.0, 4, 4));
}

TEST_CASE("2000 observations over 20 periods on the 100x80 grid") {
  const auto cfg = load_config(std::filesystem::path(PGU_SOURCE_DIR) / "configs" / "synthetic.json");
  SyntheticTruth t;
  t.grid = cfg.grid;
  t.rule = cfg.rule();
  t.domains.assign(cfg.grid.size(), 0);
  const auto obs = sample_observations(t, cfg.domains(), 0.25, 20, 1);
  CHECK(obs.size() == 2000);
  for (int p = 0; p < 20; ++p) CHECK_FALSE(obs.period(p).empty());
}

TEST_CASE("k-means clusters are non-empty and ordered") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({double(i % 10), double(i / 10) * 100.0, 0.0});
  const auto lab = kmeans_periods(pts, 5, 2);
  std::vector<int> count(5, 0);
  for (int l : lab) ++count[static_cast<std::size_t>(l)];
  for (int c : count) CHECK(c > 0);
  // Rows 100 m apart form their own clusters, numbered by y.
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(lab[i] == static_cast<int>(i / 10));
  CHECK_THROWS_AS(kmeans_periods(pts, 60, 1), DataError);
}

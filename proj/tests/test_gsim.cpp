#include <doctest.h>

#include <cmath>

#include "pgu/gsim.hpp"
#include "pgu/pipeline.hpp"
#include "pgu/random.hpp"
#include "support.hpp"

using namespace pgu;

namespace {

GridSpec grid(std::size_t nx, std::size_t ny) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.dx = g.dy = g.dz = 5.0;
  g.origin = {2.5, 2.5, 2.5};
  return g;
}

}  // namespace

TEST_CASE("simulation path is a permutation") {
  auto p = SimulationPath::make(100, 3).order;
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < 100; ++i) CHECK(p[i] == i);
}

TEST_CASE("conditioning data are reproduced exactly") {
  const auto g = grid(20, 20);
  const auto m = VariogramModel::isotropic(StructureKind::spherical, 40.0);
  const std::vector<ConditioningDatum> data{{g.centroid(45), 1.3}, {g.centroid(300), -0.7}};
  const auto f = simulate_conditional(g, data, m, 8);
  CHECK(f[45] == 1.3);
  CHECK(f[300] == -0.7);
}

TEST_CASE("unconditional simulation has standard moments and the model variogram") {
  const auto g = grid(100, 100);
  const double range = 60.0;
  const auto m = VariogramModel::isotropic(StructureKind::spherical, range);
  double mean_sum = 0.0, var_sum = 0.0;
  std::vector<double> gam(4, 0.0);
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const auto f = simulate_conditional(g, {}, m, 1000 + s);
    const std::vector<double> v(f.begin(), f.end());
    mean_sum += testing::mean(v);
    var_sum += testing::variance(v);
    // Lags of 1..4 blocks (5..20 m) along x and y, all below half the range.
    for (std::size_t lag = 1; lag <= 4; ++lag) {
      double acc = 0.0;
      std::size_t n = 0;
      for (std::size_t iy = 0; iy < g.ny; ++iy)
        for (std::size_t ix = 0; ix + lag < g.nx; ++ix) {
          const double d1 = f[g.index(ix + lag, iy, 0)] - f[g.index(ix, iy, 0)];
          const double d2 = f[g.index(iy, ix + lag, 0)] - f[g.index(iy, ix, 0)];
          acc += 0.5 * (d1 * d1 + d2 * d2);
          n += 2;
        }
      gam[lag - 1] += acc / static_cast<double>(n);
    }
  }
  CHECK(std::abs(mean_sum / seeds) < 0.05);
  CHECK(var_sum / seeds >= 0.9);
  CHECK(var_sum / seeds <= 1.1);
  for (std::size_t lag = 1; lag <= 4; ++lag) {
    const double model = m.gamma({5.0 * lag, 0, 0});
    const double exp = gam[lag - 1] / seeds;
    CAPTURE(lag);
    CHECK(std::abs(exp - model) <= 0.15 * model);
  }
}

TEST_CASE("unconditional prior realization honours the rule proportions") {
  const auto g = grid(100, 100);
  const auto rule = thresholds_from_proportions(testing::split_g1({"A", "B", "C"}), std::vector<double>{0.2, 0.5, 0.3});
  const std::array<VariogramModel, 2> vg{VariogramModel::isotropic(StructureKind::spherical, 30.0),
                                         VariogramModel::isotropic(StructureKind::spherical, 30.0)};
  const auto ens = simulate_prior_ensemble(g, {}, vg, rule, 1, 5);
  const auto expected = rule_proportions(rule);
  std::vector<double> freq(3, 0.0);
  for (const double d : ens.field(0, ens.var(kDomain))) freq[static_cast<std::size_t>(d)] += 1.0 / g.size();
  for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(freq[d] - expected[d]) < 0.03);
}

TEST_CASE("prior ensemble is consistent, conditioned and thread independent") {
  const auto g = grid(25, 20);
  const auto rule = thresholds_from_proportions(testing::table2_topology(), testing::table2_normalised());
  const std::array<VariogramModel, 2> vg{VariogramModel::isotropic(StructureKind::spherical, 40.0),
                                         VariogramModel::isotropic(StructureKind::gaussian, 30.0)};
  DomainData data;
  Rng rng(1);
  for (int i = 0; i < 30; ++i) {
    data.locations.push_back(g.centroid(rng() % g.size()));
    data.labels.push_back(static_cast<int>(rng() % 5));
  }
  // Duplicate blocks would carry conflicting labels; keep one datum per block.
  DomainData unique;
  std::vector<bool> used(g.size(), false);
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    const auto b = *g.locate(data.locations[i]);
    if (used[b]) continue;
    used[b] = true;
    unique.locations.push_back(data.locations[i]);
    unique.labels.push_back(data.labels[i]);
  }
  PriorOptions o;
  o.gibbs_iterations = 20;
  o.threads = 1;
  const auto e1 = simulate_prior_ensemble(g, unique, vg, rule, 4, 9, o);
  o.threads = 3;
  const auto e3 = simulate_prior_ensemble(g, unique, vg, rule, 4, 9, o);
  CHECK(e1 == e3);
  const auto dv = e1.var(kDomain), v1 = e1.var(kG1), v2 = e1.var(kG2);
  for (std::size_t r = 0; r < e1.n_real(); ++r) {
    for (std::size_t b = 0; b < g.size(); ++b)
      REQUIRE(rule.truncate(e1.at(r, v1, b), e1.at(r, v2, b)) == static_cast<int>(e1.at(r, dv, b)));
    for (std::size_t i = 0; i < unique.labels.size(); ++i)
      CHECK(e1.at(r, dv, *g.locate(unique.locations[i])) == unique.labels[i]);
  }
  bool differ = false;
  for (std::size_t b = 0; b < g.size(); ++b) differ |= e1.at(0, v1, b) != e1.at(1, v1, b);
  CHECK(differ);
}

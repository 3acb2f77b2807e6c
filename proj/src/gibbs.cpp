#include "pgu/gibbs.hpp"

#include <string>

#include "pgu/error.hpp"
#include "pgu/log.hpp"
#include "pgu/normal.hpp"
#include "pgu/random.hpp"
#include "pgu/simd/kernels.hpp"

namespace pgu {

GibbsState gibbs_initialise(std::span<const int> labels, const TruncationRule& rule,
                            std::uint64_t seed) {
  GibbsState s;
  s.seed = seed;
  const std::size_t n = labels.size();
  s.g1.resize(n);
  s.g2.resize(n);
  s.interval1.resize(n);
  s.interval2.resize(n);
  Rng rng = make_rng(seed, Stream::gibbs_init, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= rule.n_domains())
      throw DataError("gibbs: unknown domain label index " + std::to_string(labels[i]));
    s.interval1[i] = domain_interval(rule, labels[i], 1);
    s.interval2[i] = domain_interval(rule, labels[i], 2);
    s.g1[i] = normal::sample_truncated(rng, s.interval1[i].first, s.interval1[i].second);
    s.g2[i] = normal::sample_truncated(rng, s.interval2[i].first, s.interval2[i].second);
  }
  return s;
}

GibbsPlan make_gibbs_plan(std::span<const Vec3> locations,
                          const std::array<VariogramModel, 2>& variograms,
                          std::size_t max_neighbors) {
  GibbsPlan plan;
  const KrigingOptions opts{max_neighbors};
  std::size_t degenerate = 0;
  for (std::size_t g = 0; g < 2; ++g) {
    const auto& model = variograms[g];
    auto& entries = plan.grf[g];
    entries.resize(locations.size());
    std::vector<Vec3> nb_locs;
    for (std::size_t i = 0; i < locations.size(); ++i) {
      const auto nb = nearest_neighbors(locations[i], locations, model, opts, i);
      nb_locs.clear();
      for (const auto j : nb) nb_locs.push_back(locations[j]);
      const auto kw = solve_simple_kriging(locations[i], nb_locs, model);
      auto& e = entries[i];
      for (std::size_t u = 0; u < kw.used.size(); ++u) e.neighbors.push_back(nb[kw.used[u]]);
      e.weights = kw.weights;
      e.sigma = std::sqrt(kw.variance);
      if (e.sigma == 0.0) ++degenerate;
    }
  }
  if (degenerate > 0) {
    log::warn("gibbs: " + std::to_string(degenerate) +
              " point(s) with zero kriging variance (duplicate locations) keep their values");
  }
  return plan;
}

void gibbs_sweep(GibbsState& state, const GibbsPlan& plan) {
  const std::size_t n = state.size();
  if (plan.grf[0].size() != n || plan.grf[1].size() != n)
    throw DataError("gibbs_sweep: plan does not match state size");
  Rng order_rng = make_rng(state.seed, Stream::gibbs_order, state.iteration);
  Rng rng = make_rng(state.seed, Stream::gibbs_draw, state.iteration);
  const auto order = random_permutation(n, order_rng);
  std::vector<double> gathered;
  for (const std::size_t i : order) {
    for (std::size_t g = 0; g < 2; ++g) {
      auto& values = g == 0 ? state.g1 : state.g2;
      const auto& iv = g == 0 ? state.interval1[i] : state.interval2[i];
      const auto& e = plan.grf[g][i];
      if (e.sigma == 0.0) continue;
      gathered.resize(e.neighbors.size());
      for (std::size_t k = 0; k < e.neighbors.size(); ++k) gathered[k] = values[e.neighbors[k]];
      const double est = simd::dot(e.weights, gathered);
      const double r = normal::sample_truncated(rng, (iv.first - est) / e.sigma, (iv.second - est) / e.sigma);
      double v = est + e.sigma * r;
      // Rounding in est + sigma*r can land a hair outside a finite bound.
      if (v < iv.first) v = iv.first;
      if (v >= iv.second) v = std::nextafter(iv.second, -std::numeric_limits<double>::infinity());
      values[i] = v;
    }
  }
  ++state.iteration;
}

GibbsState gibbs_sweep(GibbsState state, const std::array<VariogramModel, 2>& variograms,
                       std::span<const Vec3> locations, std::size_t max_neighbors) {
  gibbs_sweep(state, make_gibbs_plan(locations, variograms, max_neighbors));
  return state;
}

GibbsState gibbs_run(std::span<const Vec3> locations, std::span<const int> labels,
                     const TruncationRule& rule, const std::array<VariogramModel, 2>& variograms,
                     std::size_t iterations, std::uint64_t seed, std::size_t max_neighbors) {
  if (locations.size() != labels.size()) throw DataError("gibbs_run: locations/labels size mismatch");
  GibbsState state = gibbs_initialise(labels, rule, seed);
  if (labels.empty()) return state;
  const GibbsPlan plan = make_gibbs_plan(locations, variograms, max_neighbors);
  for (std::size_t it = 0; it < iterations; ++it) gibbs_sweep(state, plan);
  return state;
}

}  // namespace pgu

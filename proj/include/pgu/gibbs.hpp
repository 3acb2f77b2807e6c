#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pgu/kriging.hpp"
#include "pgu/truncation.hpp"

namespace pgu {

/// Current Gaussian values of both GRFs at every conditioning point together
/// with the truncation interval each value must stay inside.
struct GibbsState {
  std::vector<double> g1, g2;
  std::vector<Interval> interval1, interval2;
  std::size_t iteration = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return g1.size(); }
};

/// Kriging weights of every point from its nearest other points, one set per
/// GRF. Locations never move between sweeps, so the systems are solved once.
struct GibbsPlan {
  struct Entry {
    std::vector<std::size_t> neighbors;
    std::vector<double> weights;
    double sigma = 1.0;
  };
  std::array<std::vector<Entry>, 2> grf;
};

/// Independent draws from the standard normal truncated to each point's
/// domain interval.
GibbsState gibbs_initialise(std::span<const int> labels, const TruncationRule& rule,
                            std::uint64_t seed);

GibbsPlan make_gibbs_plan(std::span<const Vec3> locations,
                          const std::array<VariogramModel, 2>& variograms,
                          std::size_t max_neighbors = 32);

/// One sweep: points visited in an order reshuffled per sweep; each GRF value
/// is redrawn as kriging estimate + sigma_K * R with R truncated so the value
/// stays in its interval. Points with sigma_K = 0 keep their value.
void gibbs_sweep(GibbsState& state, const GibbsPlan& plan);

GibbsState gibbs_sweep(GibbsState state, const std::array<VariogramModel, 2>& variograms,
                       std::span<const Vec3> locations, std::size_t max_neighbors = 32);

/// initialise + `iterations` sweeps. Truncating the result reproduces the
/// input labels exactly.
GibbsState gibbs_run(std::span<const Vec3> locations, std::span<const int> labels,
                     const TruncationRule& rule, const std::array<VariogramModel, 2>& variograms,
                     std::size_t iterations, std::uint64_t seed, std::size_t max_neighbors = 32);

}  // namespace pgu

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pgu/ensemble.hpp"
#include "pgu/gibbs.hpp"
#include "pgu/grid.hpp"
#include "pgu/variogram.hpp"

namespace pgu {

struct ConditioningDatum {
  Vec3 location{};
  double value = 0.0;
};

struct SimulationOptions {
  std::size_t max_simulated = 24;  // previously simulated nodes per kriging system
  std::size_t max_data = 8;        // conditioning data per kriging system
  std::size_t max_template = 20000;
};

/// Seeded random visiting order over `n` targets.
struct SimulationPath {
  std::vector<std::size_t> order;
  static SimulationPath make(std::size_t n, std::uint64_t seed);
};

/// Sequential Gaussian simulation of a zero-mean GRF on every block.
/// Conditioning data are snapped to their blocks (co-located data averaged)
/// and kept exactly; other blocks are drawn from N(estimate, variance) of
/// simple kriging on nearby data and already simulated nodes.
std::vector<double> simulate_conditional(const GridSpec& grid,
                                         std::span<const ConditioningDatum> conditioning,
                                         const VariogramModel& model, std::uint64_t seed,
                                         const SimulationOptions& options = {});

/// Conditioning points for prior pluri-Gaussian realizations.
struct DomainData {
  std::vector<Vec3> locations;
  std::vector<int> labels;
};

struct PriorOptions {
  std::size_t gibbs_iterations = 1000;
  std::size_t gibbs_neighbors = 32;
  SimulationOptions simulation;
  std::size_t threads = 0;
};

/// Per realization: a fresh Gibbs run on the data, one conditional
/// simulation per GRF, and truncation. Variables: "G1", "G2", "domain".
/// Realization r depends only on (seed, r), so results are independent of
/// the thread count.
Ensemble simulate_prior_ensemble(const GridSpec& grid, const DomainData& data,
                                 const std::array<VariogramModel, 2>& variograms,
                                 const TruncationRule& rule, std::size_t n_real, std::uint64_t seed,
                                 const PriorOptions& options = {});

}  // namespace pgu

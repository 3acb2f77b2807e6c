#pragma once

#include <cstdint>
#include <vector>

#include "pgu/config.hpp"
#include "pgu/observations.hpp"

namespace pgu {

/// Self-generated reference model for the synthetic case study.
struct SyntheticTruth {
  GridSpec grid;
  TruncationRule rule;
  std::vector<double> g1, g2;
  std::vector<int> domains;
  std::vector<std::string> variables;
  std::vector<std::vector<double>> grades;  // per variable, per block
};

/// One unconditional pluri-Gaussian realization under the truth variograms
/// and the proportion-derived thresholds shifted by `threshold_shift`.
/// Grades: per-domain lognormal transforms of correlated latent fields
/// Y_v = rho S + sqrt(1 - rho^2) E_v, calibrated so each domain's grade mean
/// and SD match the targets on the generated grid.
SyntheticTruth generate_truth(const Config& cfg);

/// Uniform block sample without replacement (fraction of the grid, at least
/// one block), split into n_periods spatial clusters by seeded k-means on
/// block centroids. Clusters are numbered by centroid (z, then y, then x).
/// Observed values equal the truth at their blocks.
ObservationSet sample_observations(const SyntheticTruth& truth, const std::vector<std::string>& domains,
                                   double fraction, int n_periods, std::uint64_t seed);

/// Sparse random conditioning sample (all in period 0) for the prior.
ObservationSet sample_drill(const SyntheticTruth& truth, const std::vector<std::string>& domains,
                            double fraction, std::uint64_t seed);

/// Seeded k-means++ with Lloyd iterations; every cluster is non-empty when
/// points.size() >= k. Returns the cluster of each point, clusters numbered
/// by centroid in (z, y, x) order.
std::vector<int> kmeans_periods(const std::vector<Vec3>& points, int k, std::uint64_t seed);

}  // namespace pgu

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pgu/variogram.hpp"

namespace pgu {

struct KrigingResult {
  double estimate = 0.0;
  double variance = 0.0;
};

/// Simple-kriging weights for a target given neighbour locations.
/// `used` lists the neighbour positions that survived the singularity policy.
struct KrigingWeights {
  std::vector<std::size_t> used;
  std::vector<double> weights;
  double variance = 0.0;
};

struct KrigingOptions {
  std::size_t max_neighbors = 32;
  /// Neighbours beyond this normalised distance are ignored (1 = the range).
  double max_normalized_distance = std::numeric_limits<double>::infinity();
};

/// Zero-mean simple kriging. The diagonal carries a 1e-10*C(0) jitter; if the
/// factorisation still fails, one point of the closest neighbour pair is
/// dropped and the solve retried.
KrigingWeights solve_simple_kriging(const Vec3& target, std::span<const Vec3> neighbors,
                                    const VariogramModel& model);

KrigingResult simple_krige(const Vec3& target, std::span<const Vec3> neighbors,
                           std::span<const double> values, const VariogramModel& model);

/// Indices of up to max_neighbors candidates closest to target by
/// anisotropy-normalised distance; `exclude` is skipped. Ties keep index order.
std::vector<std::size_t> nearest_neighbors(const Vec3& target, std::span<const Vec3> candidates,
                                           const VariogramModel& model,
                                           const KrigingOptions& options = {},
                                           std::size_t exclude = static_cast<std::size_t>(-1));

}  // namespace pgu

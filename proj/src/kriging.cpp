#include "pgu/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pgu/error.hpp"
#include "pgu/simd/kernels.hpp"

namespace pgu {
namespace {

constexpr double kJitter = 1e-10;
constexpr double kPivotFloor = 1e-9;

}  // namespace

KrigingWeights solve_simple_kriging(const Vec3& target, std::span<const Vec3> neighbors,
                                    const VariogramModel& model) {
  const double c0 = model.total_sill();
  KrigingWeights out;
  out.used.resize(neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) out.used[i] = i;

  for (;;) {
    const auto n = static_cast<Eigen::Index>(out.used.size());
    if (n == 0) {
      out.weights.clear();
      out.variance = c0;
      return out;
    }
    Eigen::MatrixXd c(n, n);
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3& pi = neighbors[out.used[static_cast<std::size_t>(i)]];
      c(i, i) = c0 * (1.0 + kJitter);
      for (Eigen::Index j = 0; j < i; ++j) {
        c(i, j) = c(j, i) = model.covariance(pi, neighbors[out.used[static_cast<std::size_t>(j)]]);
      }
      k(i) = model.covariance(pi, target);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      const auto& l = llt.matrixLLT();
      for (Eigen::Index i = 0; i < n && ok; ++i) ok = l(i, i) * l(i, i) >= kPivotFloor * c0;
    }
    if (ok) {
      const Eigen::VectorXd w = llt.solve(k);
      if (!w.allFinite()) throw NumericError("simple kriging produced non-finite weights");
      out.weights.assign(w.data(), w.data() + n);
      out.variance = std::clamp(c0 - k.dot(w), 0.0, c0);
      return out;
    }
    // Drop the later point of the closest pair and retry.
    std::size_t drop = out.used.size() - 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.used.size(); ++i) {
      for (std::size_t j = i + 1; j < out.used.size(); ++j) {
        const double d = distance(neighbors[out.used[i]], neighbors[out.used[j]]);
        if (d < best) {
          best = d;
          drop = j;
        }
      }
    }
    if (out.used.size() == 1) {
      throw NumericError("simple kriging system singular with a single neighbour");
    }
    out.used.erase(out.used.begin() + static_cast<std::ptrdiff_t>(drop));
  }
}

KrigingResult simple_krige(const Vec3& target, std::span<const Vec3> neighbors,
                           std::span<const double> values, const VariogramModel& model) {
  if (values.size() != neighbors.size())
    throw DataError("simple_krige: " + std::to_string(neighbors.size()) + " locations but " +
                    std::to_string(values.size()) + " values");
  const KrigingWeights kw = solve_simple_kriging(target, neighbors, model);
  std::vector<double> z(kw.used.size());
  for (std::size_t i = 0; i < kw.used.size(); ++i) z[i] = values[kw.used[i]];
  return {simd::dot(kw.weights, z), kw.variance};
}

std::vector<std::size_t> nearest_neighbors(const Vec3& target, std::span<const Vec3> candidates,
                                           const VariogramModel& model,
                                           const KrigingOptions& options, std::size_t exclude) {
  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i == exclude) continue;
    const Vec3& p = candidates[i];
    const double d = model.normalized_distance({p[0] - target[0], p[1] - target[1], p[2] - target[2]});
    if (d <= options.max_normalized_distance) ranked.emplace_back(d, i);
  }
  const std::size_t n = std::min(options.max_neighbors, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end());
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ranked[i].second;
  return out;
}

}  // namespace pgu

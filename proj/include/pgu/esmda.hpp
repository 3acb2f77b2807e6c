#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "pgu/grid.hpp"

namespace pgu {

/// Gaspari-Cohn compactly supported correlation of distance d for radius L:
/// 1 at d = 0, exactly 0 for d >= 2L.
double gaspari_cohn(double d, double radius);

/// One linear-Gaussian analysis. Rows of `state` and `predictions` are
/// realizations. Leave the location lists empty (or the radius infinite) to
/// skip localization.
struct AssimilationProblem {
  Eigen::MatrixXd state;        // n_real x n_state
  Eigen::MatrixXd predictions;  // n_real x n_obs
  Eigen::VectorXd observations;
  Eigen::VectorXd error_sd;
  std::vector<Vec3> state_locations;
  std::vector<Vec3> obs_locations;
  double localization_radius = std::numeric_limits<double>::infinity();

  std::size_t n_real() const { return static_cast<std::size_t>(state.rows()); }
  bool localized() const;
  /// Throws DataError on inconsistent dimensions, n_real < 2 or sd <= 0.
  void validate() const;
};

/// Inflation coefficients with sum(1/alpha) = 1.
class MdaSchedule {
 public:
  /// Throws ConfigError unless every alpha > 0 and sum(1/alpha) = 1 +- 1e-9.
  explicit MdaSchedule(std::vector<double> alpha);
  /// alpha_i = n for i = 1..n.
  static MdaSchedule constant(std::size_t n);

  std::size_t size() const { return alpha_.size(); }
  double operator[](std::size_t i) const { return alpha_[i]; }

 private:
  std::vector<double> alpha_;
};

/// Localization weights state x obs and obs x obs.
struct Localization {
  Eigen::MatrixXd state_obs;
  Eigen::MatrixXd obs_obs;
};
Localization localization_weights(const AssimilationProblem& problem);

/// K = (rho o C_YD)(rho o C_DD + alpha C_D)^-1, n_state x n_obs. Sample
/// covariances use ensemble-mean centering and 1/(n-1); the system is
/// factorised, never inverted. Pass precomputed weights to skip recomputing.
Eigen::MatrixXd kalman_gain(const AssimilationProblem& problem, double alpha,
                            const Localization* localization = nullptr);

/// state_j += K (perturbed_j - H_j) for every realization j.
Eigen::MatrixXd assimilate_once(const AssimilationProblem& problem, const Eigen::MatrixXd& gain,
                                const Eigen::MatrixXd& perturbed_obs);

/// observations + N(0, alpha sd^2) per realization; depends only on
/// (seed, cycle, realization).
Eigen::MatrixXd perturb_observations(const Eigen::VectorXd& observations,
                                     const Eigen::VectorXd& error_sd, double alpha,
                                     std::size_t n_real, std::uint64_t seed, std::size_t cycle);

using ForwardModel = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& state)>;

/// Forward model that reads state columns at the given positions.
ForwardModel select_columns(std::vector<std::size_t> columns);

/// N_a cycles of predict, perturb, gain, update. The problem's predictions are
/// ignored and recomputed with `forward`. Warns when the prediction MSE at the
/// observations is not lower after the last cycle than before the first.
Eigen::MatrixXd mda_update(const AssimilationProblem& problem, const MdaSchedule& schedule,
                           const ForwardModel& forward, std::uint64_t seed);

}  // namespace pgu

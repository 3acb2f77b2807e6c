#include "pgu/esmda.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "pgu/error.hpp"
#include "pgu/log.hpp"
#include "pgu/random.hpp"
#include "pgu/simd/kernels.hpp"

namespace pgu {

double gaspari_cohn(double d, double radius) {
  double out = 0.0;
  simd::scalar_table().gaspari_cohn(&d, 1.0 / radius, &out, 1);
  return out;
}

bool AssimilationProblem::localized() const {
  return std::isfinite(localization_radius) && !state_locations.empty() && !obs_locations.empty();
}

void AssimilationProblem::validate() const {
  const auto n = state.rows();
  const auto n_obs = predictions.cols();
  if (n < 2) throw DataError("assimilation: need at least 2 realizations");
  if (predictions.rows() != n) throw DataError("assimilation: predictions/state realization mismatch");
  if (observations.size() != n_obs || error_sd.size() != n_obs)
    throw DataError("assimilation: observation vector length mismatch");
  for (Eigen::Index i = 0; i < n_obs; ++i)
    if (!(error_sd(i) > 0.0)) throw DataError("assimilation: error SD must be positive");
  if (localized()) {
    if (!(localization_radius > 0.0)) throw DataError("assimilation: localization radius must be positive");
    if (static_cast<Eigen::Index>(state_locations.size()) != state.cols() ||
        static_cast<Eigen::Index>(obs_locations.size()) != n_obs)
      throw DataError("assimilation: location list length mismatch");
  }
}

MdaSchedule::MdaSchedule(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.empty()) throw ConfigError("MDA schedule: at least one assimilation required");
  double s = 0.0;
  for (const double a : alpha_) {
    if (!(a > 0.0)) throw ConfigError("MDA schedule: inflation coefficients must be positive");
    s += 1.0 / a;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ConfigError("MDA schedule: sum of 1/alpha must equal 1");
}

MdaSchedule MdaSchedule::constant(std::size_t n) {
  if (n == 0) throw ConfigError("MDA schedule: at least one assimilation required");
  return MdaSchedule(std::vector<double>(n, static_cast<double>(n)));
}

Localization localization_weights(const AssimilationProblem& p) {
  const auto n_state = p.state.cols();
  const auto n_obs = p.predictions.cols();
  Localization loc;
  if (!p.localized()) {
    loc.state_obs = Eigen::MatrixXd::Ones(n_state, n_obs);
    loc.obs_obs = Eigen::MatrixXd::Ones(n_obs, n_obs);
    return loc;
  }
  auto fill = [&](const std::vector<Vec3>& rows, Eigen::MatrixXd& out) {
    out.resize(static_cast<Eigen::Index>(rows.size()), n_obs);
    std::vector<double> d(static_cast<std::size_t>(n_obs)), w(static_cast<std::size_t>(n_obs));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (Eigen::Index j = 0; j < n_obs; ++j)
        d[static_cast<std::size_t>(j)] = distance(rows[i], p.obs_locations[static_cast<std::size_t>(j)]);
      simd::gaspari_cohn(d, p.localization_radius, w);
      for (Eigen::Index j = 0; j < n_obs; ++j) out(static_cast<Eigen::Index>(i), j) = w[static_cast<std::size_t>(j)];
    }
  };
  fill(p.state_locations, loc.state_obs);
  fill(p.obs_locations, loc.obs_obs);
  return loc;
}

Eigen::MatrixXd kalman_gain(const AssimilationProblem& p, double alpha, const Localization* localization) {
  p.validate();
  const double n1 = static_cast<double>(p.state.rows() - 1);
  const Eigen::MatrixXd xc = p.state.rowwise() - p.state.colwise().mean();
  const Eigen::MatrixXd hc = p.predictions.rowwise() - p.predictions.colwise().mean();
  Eigen::MatrixXd c_yd = xc.transpose() * hc / n1;
  Eigen::MatrixXd c_dd = hc.transpose() * hc / n1;
  if (!c_yd.allFinite() || !c_dd.allFinite()) throw NumericError("kalman gain: non-finite covariance");

  Localization own;
  if (localization == nullptr && p.localized()) {
    own = localization_weights(p);
    localization = &own;
  }
  if (localization != nullptr && p.localized()) {
    c_yd.array() *= localization->state_obs.array();
    c_dd.array() *= localization->obs_obs.array();
  }
  for (Eigen::Index i = 0; i < c_dd.rows(); ++i)
    c_dd(i, i) += alpha * p.error_sd(i) * p.error_sd(i) + 1e-8;

  Eigen::LLT<Eigen::MatrixXd> llt(c_dd);
  Eigen::MatrixXd gain_t;
  if (llt.info() == Eigen::Success) {
    gain_t = llt.solve(c_yd.transpose());
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(c_dd);
    if (ldlt.info() != Eigen::Success) throw NumericError("kalman gain: factorisation failed");
    gain_t = ldlt.solve(c_yd.transpose());
  }
  if (!gain_t.allFinite()) throw NumericError("kalman gain: non-finite gain");
  return gain_t.transpose();
}

Eigen::MatrixXd assimilate_once(const AssimilationProblem& p, const Eigen::MatrixXd& gain,
                                const Eigen::MatrixXd& perturbed_obs) {
  if (perturbed_obs.rows() != p.predictions.rows() || perturbed_obs.cols() != p.predictions.cols())
    throw DataError("assimilate: perturbed observation shape mismatch");
  if (gain.rows() != p.state.cols() || gain.cols() != p.predictions.cols())
    throw DataError("assimilate: gain shape mismatch");
  return p.state + (perturbed_obs - p.predictions) * gain.transpose();
}

Eigen::MatrixXd perturb_observations(const Eigen::VectorXd& observations, const Eigen::VectorXd& error_sd,
                                     double alpha, std::size_t n_real, std::uint64_t seed, std::size_t cycle) {
  const auto n_obs = observations.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_real), n_obs);
  const double s = std::sqrt(alpha);
  const std::uint64_t cycle_seed = derive_seed(seed, Stream::perturbation, cycle);
  for (std::size_t j = 0; j < n_real; ++j) {
    Rng rng = make_rng(cycle_seed, Stream::perturbation, j);
    for (Eigen::Index i = 0; i < n_obs; ++i)
      out(static_cast<Eigen::Index>(j), i) = observations(i) + s * error_sd(i) * standard_normal(rng);
  }
  return out;
}

ForwardModel select_columns(std::vector<std::size_t> columns) {
  return [columns = std::move(columns)](const Eigen::MatrixXd& state) {
    Eigen::MatrixXd out(state.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k)
      out.col(static_cast<Eigen::Index>(k)) = state.col(static_cast<Eigen::Index>(columns[k]));
    return out;
  };
}

namespace {

double prediction_mse(const Eigen::MatrixXd& h, const Eigen::VectorXd& obs) {
  if (h.size() == 0) return 0.0;
  return (h.rowwise() - obs.transpose()).squaredNorm() / static_cast<double>(h.size());
}

}  // namespace

Eigen::MatrixXd mda_update(const AssimilationProblem& problem, const MdaSchedule& schedule,
                           const ForwardModel& forward, std::uint64_t seed) {
  AssimilationProblem p = problem;
  p.predictions = forward(p.state);
  p.validate();
  const Localization loc = localization_weights(p);
  const double mse_before = prediction_mse(p.predictions, p.observations);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0) p.predictions = forward(p.state);
    const Eigen::MatrixXd gain = kalman_gain(p, schedule[i], &loc);
    const Eigen::MatrixXd perturbed =
        perturb_observations(p.observations, p.error_sd, schedule[i], p.n_real(), seed, i);
    p.state = assimilate_once(p, gain, perturbed);
    if (!p.state.allFinite()) throw NumericError("MDA: non-finite state after update");
  }
  const double mse_after = prediction_mse(forward(p.state), p.observations);
  if (mse_before > 0.0 && !(mse_after < mse_before))
    log::warn("MDA: prediction MSE did not decrease (" + std::to_string(mse_before) + " -> " +
              std::to_string(mse_after) + ")");
  return p.state;
}

}  // namespace pgu

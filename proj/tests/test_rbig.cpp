#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pgu/error.hpp"
#include "pgu/random.hpp"
#include "pgu/rbig.hpp"

using namespace pgu;

namespace {

Eigen::MatrixXd gaussian(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = standard_normal(rng);
  return x;
}

Eigen::MatrixXd correlated_lognormal(std::size_t n, std::size_t m, double rho, std::uint64_t seed) {
  Eigen::MatrixXd z = gaussian(n, m, seed);
  for (Eigen::Index j = 1; j < z.cols(); ++j)
    z.col(j) = rho * z.col(0) + std::sqrt(1.0 - rho * rho) * z.col(j);
  return z.array().exp().matrix();
}

double skewness(const Eigen::VectorXd& v) {
  const double m = v.mean();
  const double s2 = (v.array() - m).square().mean();
  return (v.array() - m).cube().mean() / std::pow(s2, 1.5);
}

double max_abs_corr(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / double(x.rows() - 1);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = i + 1; j < cov.cols(); ++j)
      worst = std::max(worst, std::abs(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j))));
  return worst;
}

double ks_normal(Eigen::VectorXd v) {
  std::sort(v.data(), v.data() + v.size());
  double d = 0.0;
  const double n = static_cast<double>(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double f = 0.5 * std::erfc(-v(i) / std::sqrt(2.0));
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return d;
}

}  // namespace

TEST_CASE("marginal map is monotone and invertible with linear tails") {
  const std::vector<double> s{3.0, 1.0, 2.0, 2.0, 10.0};
  const MarginalMap m(s);
  CHECK(m.data_knots().size() == 4);
  for (std::size_t i = 1; i < m.data_knots().size(); ++i) {
    CHECK(m.data_knots()[i] > m.data_knots()[i - 1]);
    CHECK(m.gauss_knots()[i] > m.gauss_knots()[i - 1]);
  }
  for (double x : {1.0, 1.5, 2.0, 7.0, 10.0, -5.0, 30.0}) CHECK(m.inverse(m.forward(x)) == doctest::Approx(x));
  CHECK(std::isfinite(m.inverse(40.0)));
  const MarginalMap flat(std::vector<double>{4.0, 4.0, 4.0});
  CHECK(flat.degenerate());
}

TEST_CASE("iid normal input barely changes") {
  const auto x = gaussian(2000, 2, 1);
  const auto fit = rbig_fit(x, 1);
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(ks_normal(fit.factors.col(j)) < 0.05);
  const auto covdet = [](const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd c = a.rowwise() - a.colwise().mean();
    return (c.transpose() * c / double(a.rows() - 1)).determinant();
  };
  const auto full = rbig_fit(x);
  CHECK(std::abs(covdet(full.factors) / covdet(x) - 1.0) < 0.10);
}

TEST_CASE("one variable reduces to a normal-score transform") {
  const auto x = correlated_lognormal(500, 1, 0.0, 3);
  const auto fit = rbig_fit(x);
  REQUIRE(fit.transform.iterations.size() >= 1);
  for (const auto& it : fit.transform.iterations) CHECK(std::abs(it.rotation(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(skewness(fit.factors.col(0))) < 0.1);
}

TEST_CASE("correlated lognormal pair is decorrelated and symmetrised") {
  const auto x = correlated_lognormal(2000, 2, 0.9, 5);
  const auto fit = rbig_fit(x);
  CHECK(max_abs_corr(fit.factors) < 0.05);
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(std::abs(skewness(fit.factors.col(j))) < 0.1);
    CHECK(std::abs(fit.factors.col(j).mean()) < 0.05);
    const double var = (fit.factors.col(j).array() - fit.factors.col(j).mean()).square().sum() / 1999.0;
    CHECK(std::abs(var - 1.0) < 0.1);
  }
}

TEST_CASE("roundtrip, orthonormality and trace") {
  const auto x = correlated_lognormal(2000, 3, 0.7, 8);
  const auto fit = rbig_fit(x);
  CHECK((fit.transform.inverse(fit.factors) - x).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((fit.transform.forward(x) - fit.factors).cwiseAbs().maxCoeff() < 1e-9);
  for (const auto& it : fit.transform.iterations) {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    CHECK((it.rotation.transpose() * it.rotation - eye).cwiseAbs().maxCoeff() < 1e-10);
  }
  for (std::size_t i = 1; i < fit.transform.trace.size(); ++i)
    CHECK(fit.transform.trace[i] <= fit.transform.trace[i - 1] + 1e-9);
}

TEST_CASE("inverse of zero factors gives the medians; out-of-range factors stay finite") {
  const auto x = correlated_lognormal(999, 2, 0.0, 12);
  const auto fit = rbig_fit(x, 1);
  const Eigen::MatrixXd back = fit.transform.inverse(Eigen::MatrixXd::Zero(1, 2));
  // With one iteration and near-identity rotation, zero maps close to the median.
  for (Eigen::Index j = 0; j < 2; ++j) {
    Eigen::VectorXd c = x.col(j);
    std::sort(c.data(), c.data() + c.size());
    const double med = c(c.size() / 2);
    CHECK(std::abs(back(0, j) - med) < 0.25 * med);
  }
  Eigen::MatrixXd far(1, 2);
  far << 12.0, -12.0;
  CHECK(fit.transform.inverse(far).allFinite());
  Eigen::MatrixXd bad(1, 2);
  bad << NAN, 0.0;
  CHECK_THROWS_AS(fit.transform.inverse(bad), DataError);
}

TEST_CASE("zero factors map exactly to medians for one variable") {
  Eigen::MatrixXd x(11, 1);
  for (int i = 0; i < 11; ++i) x(i, 0) = std::exp(0.3 * i);
  const auto fit = rbig_fit(x, 1);
  CHECK(fit.transform.inverse(Eigen::MatrixXd::Zero(1, 1))(0, 0) == doctest::Approx(std::exp(1.5)));
}

TEST_CASE("preconditions and degenerate columns") {
  CHECK_THROWS_AS(rbig_fit(gaussian(15, 2, 1)), DataError);
  Eigen::MatrixXd x = gaussian(100, 2, 2);
  x(3, 1) = NAN;
  CHECK_THROWS_AS(rbig_fit(x), DataError);
  Eigen::MatrixXd c = gaussian(100, 2, 2);
  c.col(1).setConstant(3.0);
  const auto fit = rbig_fit(c);
  CHECK(fit.transform.degenerate[1]);
  CHECK(fit.factors.allFinite());
  CHECK((fit.transform.inverse(fit.factors) - c).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("serialization roundtrip") {
  const auto x = correlated_lognormal(300, 3, 0.5, 4);
  const auto fit = rbig_fit(x);
  const auto bytes = fit.transform.serialize();
  const auto back = RbigTransform::deserialize(bytes);
  CHECK(back.forward(x) == fit.transform.forward(x));
  auto bad = bytes;
  bad[0] ^= 0xFF;
  CHECK_THROWS(RbigTransform::deserialize(bad));
}

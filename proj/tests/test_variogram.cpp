#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pgu/error.hpp"
#include "pgu/kriging.hpp"
#include "pgu/random.hpp"
#include "pgu/variogram.hpp"

using namespace pgu;

TEST_CASE("variogram closed forms") {
  const auto sph = VariogramModel::isotropic(StructureKind::spherical, 100.0);
  CHECK(sph.gamma({0, 0, 0}) == 0.0);
  CHECK(sph.gamma({50, 0, 0}) == doctest::Approx(0.6875));
  CHECK(sph.gamma({200, 0, 0}) == doctest::Approx(1.0));
  CHECK(sph.covariance(Vec3{0, 0, 0}) == doctest::Approx(1.0));
  CHECK(sph.covariance(Vec3{0, 50, 0}) == doctest::Approx(0.3125));
  CHECK(sph.covariance(Vec3{0, 0, 150}) == 0.0);
  const auto ex = VariogramModel::isotropic(StructureKind::exponential, 100.0);
  CHECK(ex.gamma({100, 0, 0}) == doctest::Approx(1.0 - std::exp(-3.0)));
  const auto ga = VariogramModel::isotropic(StructureKind::gaussian, 100.0);
  CHECK(ga.gamma({50, 0, 0}) == doctest::Approx(1.0 - std::exp(-0.75)));
}

TEST_CASE("variogram validation") {
  CHECK_THROWS_AS(VariogramModel(-0.1, {VariogramStructure{}}), ConfigError);
  VariogramStructure s;
  s.ranges = {0.0, 1.0, 1.0};
  CHECK_THROWS_AS(VariogramModel(0.0, {s}), ConfigError);
}

TEST_CASE("anisotropic model is symmetric and rotated") {
  VariogramStructure s;
  s.kind = StructureKind::spherical;
  s.ranges = {100.0, 20.0, 10.0};
  s.angles = {90.0, 0.0, 0.0};
  const VariogramModel m(0.1, {VariogramStructure{s.kind, 0.9, s.ranges, s.angles}});
  CHECK(m.total_sill() == doctest::Approx(1.0));
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Vec3 h{standard_normal(rng) * 50, standard_normal(rng) * 50, standard_normal(rng) * 5};
    CHECK(m.gamma(h) == doctest::Approx(m.gamma({-h[0], -h[1], -h[2]})));
    CHECK(std::abs(m.covariance(h)) <= m.covariance(Vec3{0, 0, 0}) + 1e-15);
  }
  // A 90 degree azimuth swaps the long axis between x and y.
  CHECK(m.gamma({0, 60, 0}) < m.gamma({60, 0, 0}));
}

TEST_CASE("covariance matrices are positive semi-definite") {
  Rng rng(9);
  for (auto kind : {StructureKind::spherical, StructureKind::exponential, StructureKind::gaussian}) {
    const auto m = VariogramModel::isotropic(kind, 40.0);
    std::vector<Vec3> pts(200);
    for (auto& p : pts) p = {uniform_open(rng) * 100, uniform_open(rng) * 100, 0.0};
    Eigen::MatrixXd c(200, 200);
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; ++j) c(i, j) = m.covariance(pts[i], pts[j]) + (i == j ? 1e-10 : 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("simple kriging examples") {
  const auto m = VariogramModel::isotropic(StructureKind::spherical, 100.0);
  const auto none = simple_krige({0, 0, 0}, {}, {}, m);
  CHECK(none.estimate == 0.0);
  CHECK(none.variance == doctest::Approx(1.0));

  const std::vector<Vec3> one{{10, 10, 0}};
  const std::vector<double> v{1.7};
  const auto exact = simple_krige({10, 10, 0}, one, v, m);
  CHECK(exact.estimate == doctest::Approx(1.7).epsilon(1e-8));
  CHECK(exact.variance == doctest::Approx(0.0).epsilon(1e-8));

  const std::vector<Vec3> lag{{50, 0, 0}};
  const std::vector<double> z{2.0};
  const auto r = simple_krige({0, 0, 0}, lag, z, m);
  const double c = 0.3125;
  CHECK(r.estimate == doctest::Approx(c * 2.0));
  CHECK(r.variance == doctest::Approx(1.0 - c * c));
}

TEST_CASE("kriging variance shrinks with nested neighbour sets and ignores order") {
  const auto m = VariogramModel::isotropic(StructureKind::exponential, 60.0);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> pts;
    std::vector<double> vals;
    const Vec3 target{50, 50, 0};
    double prev = 2.0;
    for (int k = 0; k < 12; ++k) {
      pts.push_back({uniform_open(rng) * 100, uniform_open(rng) * 100, 0});
      vals.push_back(standard_normal(rng));
      const auto r = simple_krige(target, pts, vals, m);
      CHECK(r.variance <= prev + 1e-12);
      prev = r.variance;
    }
    auto p2 = pts;
    auto v2 = vals;
    std::reverse(p2.begin(), p2.end());
    std::reverse(v2.begin(), v2.end());
    CHECK(simple_krige(target, p2, v2, m).estimate ==
          doctest::Approx(simple_krige(target, pts, vals, m).estimate).epsilon(1e-10));
  }
}

TEST_CASE("duplicate neighbours are dropped rather than failing") {
  const auto m = VariogramModel::isotropic(StructureKind::gaussian, 50.0);
  const std::vector<Vec3> pts{{0, 0, 0}, {0, 0, 0}, {10, 0, 0}};
  const std::vector<double> vals{1.0, 1.0, 0.5};
  const auto r = simple_krige({5, 0, 0}, pts, vals, m);
  CHECK(std::isfinite(r.estimate));
  CHECK(r.variance >= 0.0);
}

TEST_CASE("nearest neighbour search") {
  const auto m = VariogramModel::isotropic(StructureKind::spherical, 100.0);
  const std::vector<Vec3> c{{30, 0, 0}, {10, 0, 0}, {20, 0, 0}, {10, 0, 0}};
  KrigingOptions o;
  o.max_neighbors = 3;
  const auto nn = nearest_neighbors({0, 0, 0}, c, m, o, 2);
  CHECK(nn == std::vector<std::size_t>{1, 3, 0});
}

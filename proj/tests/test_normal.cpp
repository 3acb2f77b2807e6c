#include <doctest.h>

#include <cmath>

#include "pgu/normal.hpp"
#include "pgu/random.hpp"
#include "support.hpp"

using namespace pgu;

TEST_CASE("normal cdf and quantile match erfc-based oracles") {
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    CHECK(normal::cdf(x) == doctest::Approx(testing::Phi(x)).epsilon(1e-12));
    CHECK(normal::pdf(x) == doctest::Approx(testing::phi(x)).epsilon(1e-12));
  }
  for (double p : {1e-12, 1e-6, 0.01, 0.142, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.9, 0.999999}) {
    CHECK(normal::quantile(p) == doctest::Approx(testing::Phi_inv(p)).epsilon(1e-9));
  }
  CHECK(normal::quantile(0.5) == 0.0);
  CHECK(std::isinf(normal::quantile(0.0)));
  CHECK(normal::isf(normal::sf(9.0)) == doctest::Approx(9.0).epsilon(1e-10));
}

TEST_CASE("truncated sampler respects bounds and moments") {
  Rng rng(11);
  const std::pair<double, double> cases[] = {{-INFINITY, 0.0}, {0.5, 0.6}, {-1.0, 2.0}, {6.5, INFINITY}, {40.0, 41.0}};
  for (auto [lo, hi] : cases) {
    CAPTURE(lo);
    CAPTURE(hi);
    std::vector<double> v;
    for (int i = 0; i < 40000; ++i) {
      const double x = normal::sample_truncated(rng, lo, hi);
      REQUIRE(x >= lo);
      REQUIRE(x <= hi);
      v.push_back(x);
    }
    if (lo < 30.0) {
      const double m = testing::truncated_mean(lo, hi);
      const double se = std::sqrt(testing::truncated_var(lo, hi) / 40000.0);
      CHECK(std::abs(testing::mean(v) - m) < 4.0 * se + 1e-12);
      CHECK(normal::truncated_mean(lo, hi) == doctest::Approx(m).epsilon(1e-8));
    }
  }
}

TEST_CASE("interval probability") {
  CHECK(normal::interval_probability(-INFINITY, INFINITY) == 1.0);
  CHECK(normal::interval_probability(0.0, INFINITY) == doctest::Approx(0.5));
  CHECK(normal::interval_probability(1.0, 2.0) == doctest::Approx(testing::Phi(2.0) - testing::Phi(1.0)).epsilon(1e-12));
}

#include "pgu/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace pgu::normal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Policy = boost::math::policies::policy<boost::math::policies::overflow_error<boost::math::policies::ignore_error>>;
const boost::math::normal_distribution<double, Policy> kStandard(0.0, 1.0);

// Right tail [lo, hi] with lo >= 0.
double sample_right_tail(Rng& rng, double lo, double hi) {
  const double q_lo = sf(lo);
  const double q_hi = sf(hi);
  if (q_lo > 0.0 && q_lo > q_hi) {
    const double u = uniform_open(rng);
    const double q = q_hi + u * (q_lo - q_hi);
    return std::clamp(isf(q), lo, hi);
  }
  // Tail mass underflows: Rayleigh proposal x = sqrt(lo^2 - 2 ln u), accepted
  // with probability lo / x, is exact for the normal tail beyond lo.
  for (;;) {
    const double u = uniform_open(rng);
    const double x = std::sqrt(lo * lo - 2.0 * std::log(u));
    if (x > hi) continue;
    if (uniform_open(rng) * x <= lo) return x;
  }
}

}  // namespace

double pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double cdf(double x) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return 1.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double sf(double x) {
  if (x == -kInf) return 1.0;
  if (x == kInf) return 0.0;
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return boost::math::quantile(kStandard, p);
}

double isf(double q) {
  if (q <= 0.0) return kInf;
  if (q >= 1.0) return -kInf;
  return boost::math::quantile(boost::math::complement(kStandard, q));
}

double interval_probability(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (lo >= 0.0) return sf(lo) - sf(hi);
  if (hi <= 0.0) return cdf(hi) - cdf(lo);
  return 1.0 - cdf(lo) - sf(hi);
}

double sample_truncated(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  if (lo >= 0.0) return sample_right_tail(rng, lo, hi);
  if (hi <= 0.0) return -sample_right_tail(rng, -hi, -lo);
  const double p_lo = cdf(lo);
  const double p_hi = cdf(hi);
  const double u = uniform_open(rng);
  return std::clamp(quantile(p_lo + u * (p_hi - p_lo)), lo, hi);
}

double truncated_mean(double lo, double hi) {
  const double mass = interval_probability(lo, hi);
  const double f_lo = std::isinf(lo) ? 0.0 : pdf(lo);
  const double f_hi = std::isinf(hi) ? 0.0 : pdf(hi);
  if (mass <= 0.0) return lo >= 0.0 ? lo : hi;
  return (f_lo - f_hi) / mass;
}

}  // namespace pgu::normal

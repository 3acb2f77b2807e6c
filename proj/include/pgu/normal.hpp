#pragma once

#include "pgu/random.hpp"

namespace pgu::normal {

double pdf(double x);
/// Lower-tail probability Phi(x).
double cdf(double x);
/// Upper-tail probability 1 - Phi(x), accurate far into the right tail.
double sf(double x);
/// Phi^{-1}(p) for p in (0, 1); returns -inf / +inf at the endpoints.
double quantile(double p);
/// Inverse of sf: the x with 1 - Phi(x) = q.
double isf(double q);

/// P(lo <= X < hi) for X ~ N(0,1); bounds may be infinite.
double interval_probability(double lo, double hi);

/// Standard normal truncated to [lo, hi]. Inverse-CDF on the truncated mass,
/// evaluated in whichever tail keeps precision; beyond |x| ~ 37 the tail
/// probability underflows and an exponential-tail expansion takes over.
double sample_truncated(Rng& rng, double lo, double hi);

/// E[X | lo <= X <= hi] for X ~ N(0,1).
double truncated_mean(double lo, double hi);

}  // namespace pgu::normal

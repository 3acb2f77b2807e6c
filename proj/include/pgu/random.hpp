#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace pgu {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named RNG streams so that every consumer draws from its own sequence.
enum class Stream : std::uint64_t {
  realization = 1,
  gibbs_init,
  gibbs_order,
  gibbs_draw,
  simulation,
  perturbation,
  threshold_trial,
  synthetic,
  period,
  grade,
  prior_grade,
};

/// Seed for (stream, index) derived from a master seed; depends on nothing
/// else, so parallel and serial schedules see identical sequences.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))) ^ index);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index) {
  return Rng(derive_seed(seed, stream, index));
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(rng);
    if (u > 0.0) return u;
  }
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Fisher-Yates with our own index draws; std::shuffle is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace pgu

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pgu/truncation.hpp"

namespace pgu {

struct ScoreWeights {
  double w1 = 0.5;  // macro F1
  double w2 = 0.5;  // G-Mean
  /// Throws ConfigError unless both are >= 0 and sum to 1.
  void validate() const;
};

/// w1 * macro-F1 + w2 * G-Mean. Macro-F1 averages F1 over labels present in
/// either sequence; G-Mean is the geometric mean of recall over labels present
/// in the truth. Throws DataError on empty or mismatched input.
double classification_score(std::span<const int> truth, std::span<const int> pred, const ScoreWeights& w,
                            std::size_t n_labels);

struct ThresholdSearchSpace {
  std::vector<double> lower, upper;
  std::size_t budget = 200;
  std::uint64_t seed = 0;

  /// Box of +-halfwidth around the rule's thresholds.
  static ThresholdSearchSpace around(const TruncationRule& rule, double halfwidth, std::size_t budget,
                                     std::uint64_t seed);
  void validate() const;
};

struct ThresholdTrial {
  std::vector<double> thresholds;
  double score = 0.0;  // NaN when the candidate does not form a valid rule
};

struct ThresholdSearchResult {
  TruncationRule rule;
  double prior_score = 0.0;
  double best_score = 0.0;
  std::size_t best_trial = 0;
  std::vector<ThresholdTrial> trials;
};

/// Score of a rule at the observation locations: each realization's
/// (g1, g2) is truncated, the per-location modal label (ties to the lower
/// domain index) is compared with the observed labels.
/// g1 and g2 are realization-major, n_real x n_obs.
double score_rule(const TruncationRule& rule, std::span<const double> g1, std::span<const double> g2,
                  std::size_t n_real, std::span<const int> labels, const ScoreWeights& w);

/// Seeded uniform random search over the box. Trial 0 is the prior
/// thresholds; trial t > 0 depends only on (seed, t). The best score wins,
/// ties go to the smallest L-infinity distance from the prior thresholds and
/// then to the earlier trial, so the result never scores below the prior.
ThresholdSearchResult optimise_thresholds(std::span<const double> g1, std::span<const double> g2,
                                          std::size_t n_real, std::span<const int> labels,
                                          const TruncationRule& rule, const ThresholdSearchSpace& space,
                                          const ScoreWeights& weights, std::size_t threads = 0);

/// One row per trial: index, score, thresholds.
void write_trials_csv(const std::filesystem::path& path, const TruncationRule& rule,
                      const ThresholdSearchResult& result);

}  // namespace pgu

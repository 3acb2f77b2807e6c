#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgu/config.hpp"
#include "pgu/ensemble.hpp"
#include "pgu/observations.hpp"
#include "pgu/threshold_opt.hpp"
#include "pgu/truncation.hpp"
#include "pgu/variogram.hpp"

namespace pgu {

/// Variables every updatable ensemble carries; grade variables follow.
inline constexpr const char* kG1 = "G1";
inline constexpr const char* kG2 = "G2";
inline constexpr const char* kDomain = "domain";

/// Per-period report. Metrics that cannot be computed (nothing observed)
/// are reported as 0.
struct PeriodResult {
  int period = 0;
  std::size_t n_observations = 0;
  std::vector<std::size_t> updated_blocks;  // neighbourhood, not persisted
  std::size_t n_updated_blocks = 0;
  std::array<double, 2> grf_mse_prior{0.0, 0.0};
  std::array<double, 2> grf_mse_updated{0.0, 0.0};
  std::array<double, 2> grf_mse_reduction{0.0, 0.0};
  double domain_accuracy_prior = 0.0;  // modal label at this period's observations
  double domain_accuracy = 0.0;
  double seen_accuracy = 0.0;          // modal label at every observation so far
  double score_prior = 0.0;            // weighted F1/G-Mean before threshold search
  double score = 0.0;                  // after threshold search
  std::vector<double> thresholds;
  std::vector<double> grade_mse_prior, grade_mse_updated, grade_mse_reduction, grade_r2;
  double duration_s = 0.0;
  std::optional<ThresholdSearchResult> search;  // not persisted

  /// Equality ignoring wall-clock duration and the in-memory block list.
  bool same_metrics(const PeriodResult& o) const;
};

/// Gibbs on the period's labels, ES-MDA on G1 and G2 over the neighbourhood,
/// threshold search (when scheduled every period) on all observations seen so
/// far, and re-truncation of the neighbourhood. Blocks outside the
/// neighbourhood are not touched. Returns the rule in force afterwards.
TruncationRule update_domains_period(Ensemble& ens, const ObservationSet& obs_t, const ObservationSet& obs_seen,
                                     const TruncationRule& rule, const std::array<VariogramModel, 2>& variograms,
                                     const PipelineConfig& cfg, int period, PeriodResult& result);

/// Per-domain grade update over the neighbourhood already recorded in
/// `result`: joint Gaussianisation + ES-MDA bulk pass, then an optional
/// univariate pass on observations above the extreme percentile.
void update_grades_period(Ensemble& ens, const ObservationSet& obs_t, const ObservationSet& obs_seen,
                          std::size_t n_domains, const PipelineConfig& cfg, int period, PeriodResult& result);

/// Adds one variable per grade: independent unconditional factor fields per
/// realization mapped back through a per-domain Gaussianisation fitted on
/// the conditioning grades (pooled over domains with fewer than 10 m samples).
void simulate_prior_grades(Ensemble& ens, const ObservationSet& conditioning, const GradeConfig& grades,
                           const PriorConfig& prior, std::uint64_t seed, std::size_t rbig_max_iterations,
                           std::size_t threads = 0);

/// Threshold search on every labelled observation in `seen` around the
/// rule's thresholds with the configured box, budget and weights.
ThresholdSearchResult search_thresholds(const Ensemble& ens, const ObservationSet& seen,
                                        const TruncationRule& rule, const PipelineConfig& cfg,
                                        std::uint64_t seed);

/// Relabels the listed blocks (all blocks when empty) of every realization.
void retruncate(Ensemble& ens, const TruncationRule& rule, std::span<const std::size_t> blocks = {});

/// Config-level prior: domain realizations plus grades when configured.
Ensemble build_prior(const Config& cfg, const ObservationSet& conditioning);

struct SequenceOptions {
  std::optional<std::filesystem::path> checkpoint_dir;
  bool resume = false;
  /// Stop (as if interrupted) after this many periods have completed in this call.
  std::optional<int> stop_after;
  /// Directory for per-period threshold-search audit CSVs.
  std::optional<std::filesystem::path> audit_dir;
};

struct SequenceReport {
  std::vector<PeriodResult> periods;
  TruncationRule rule;
  /// Weighted F1/G-Mean on every observation before and after the
  /// end-of-sequence threshold search (equal when no search ran).
  double final_score_prior = 0.0;
  double final_score = 0.0;
  bool complete = false;
};

/// Processes periods 0..n-1 in order (missing periods are empty). With a
/// checkpoint directory the ensemble and report are persisted after every
/// period; `resume` continues from the last completed one. Seeds derive from
/// (cfg.rng_seed, period) only.
SequenceReport run_sequence(Ensemble& ens, const ObservationSet& obs, const TruncationRule& rule,
                            const std::array<VariogramModel, 2>& variograms, const PipelineConfig& cfg,
                            const SequenceOptions& options = {});

void write_period_csv(const std::filesystem::path& path, const std::vector<PeriodResult>& periods,
                      const std::vector<std::string>& grade_variables);

/// Indices of grade variables in the ensemble, in `names` order.
std::vector<std::size_t> grade_var_indices(const Ensemble& ens, const std::vector<std::string>& names);

}  // namespace pgu

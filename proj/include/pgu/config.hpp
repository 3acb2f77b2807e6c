#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pgu/grid.hpp"
#include "pgu/gsim.hpp"
#include "pgu/threshold_opt.hpp"
#include "pgu/truncation.hpp"
#include "pgu/variogram.hpp"

namespace pgu {

enum class ThresholdSchedule { every_period, final_only, off };

struct PipelineConfig {
  std::size_t neighbourhood_k = 3;
  std::size_t n_assimilations = 5;
  double localization_radius = 50.0;  // m
  std::size_t gibbs_iterations = 1000;
  std::size_t max_neighbors = 32;     // Gibbs kriging neighbours
  double grf_obs_noise_sd = 0.1;
  double extreme_percentile = 0.95;
  std::size_t rbig_max_iterations = 30;
  std::size_t threshold_search_budget = 200;
  double threshold_search_halfwidth = 0.6;
  ThresholdSchedule threshold_optimisation = ThresholdSchedule::every_period;
  ScoreWeights score_weights;
  bool tail_pass = true;
  std::size_t min_grade_observations = 5;
  double grade_obs_noise_sd = 0.1;  // factor units, used when a record has no err_ column
  std::uint64_t rng_seed = 0;
  std::size_t threads = 0;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct GradeConfig {
  std::vector<std::string> variables;
  VariogramModel factor_variogram = VariogramModel::isotropic(StructureKind::spherical, 50.0);
};

struct PriorConfig {
  std::size_t n_realizations = 50;
  std::optional<std::filesystem::path> conditioning;  // observations CSV with domains (and grades)
  SimulationOptions simulation;
};

struct GradeTarget {
  std::vector<double> mean, sd;  // per variable
};

struct SyntheticConfig {
  std::array<VariogramModel, 2> variograms;  // truth GRFs
  std::vector<double> threshold_shift;       // added to the proportion-derived thresholds
  std::vector<GradeTarget> grade_targets;    // per domain
  VariogramModel grade_variogram = VariogramModel::isotropic(StructureKind::spherical, 50.0);
  double grade_correlation = 0.7;
  double sampling_fraction = 0.25;
  int n_periods = 20;
  double drill_fraction = 0.015;
  std::uint64_t seed = 1;
};

struct Config {
  GridSpec grid;
  RuleTopology topology;
  std::vector<double> proportions;
  std::array<VariogramModel, 2> variograms;
  std::optional<GradeConfig> grades;
  PriorConfig prior;
  PipelineConfig pipeline;
  std::optional<SyntheticConfig> synthetic;
  std::filesystem::path base_dir;

  const std::vector<std::string>& domains() const { return topology.domains; }
  std::vector<std::string> grade_variables() const {
    return grades ? grades->variables : std::vector<std::string>{};
  }
  TruncationRule rule() const { return thresholds_from_proportions(topology, proportions); }
};

/// JSON configuration. Unknown keys and missing required sections raise
/// ConfigError naming the key; relative paths resolve against the file's
/// directory.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

std::string to_string(ThresholdSchedule s);

}  // namespace pgu

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pgu/grid.hpp"

namespace pgu {

struct ObservationRecord {
  Vec3 location{};
  int period = 0;
  std::optional<int> domain;                  // index into ObservationSet::domains
  std::optional<std::vector<double>> grades;  // one value per variable
  std::vector<double> error_sd;               // per variable, empty when not supplied
  std::size_t block = 0;                      // valid when the set is bound to a grid
};

struct ObservationSet {
  std::vector<std::string> domains;
  std::vector<std::string> variables;
  std::vector<ObservationRecord> records;
  bool bound = false;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  /// max period + 1 (periods without records count as empty periods).
  int n_periods() const;
  ObservationSet period(int t) const;
  ObservationSet up_to(int t) const;
  std::vector<std::size_t> blocks() const;
  std::vector<Vec3> locations() const;
};

struct ObservationLoadOptions {
  const GridSpec* grid = nullptr;     // when set: validate coordinates and upscale duplicates
  std::vector<std::string> domains;   // when non-empty: labels must belong to this list
  std::vector<std::string> variables; // when non-empty: grade columns must match exactly
};

/// CSV with header x,y,z,period,domain,<var1>,...,<varm>[,err_<var>...].
/// Records sharing (block, period) are merged: grades and errors averaged,
/// domain by majority vote with ties going to the globally more abundant label.
ObservationSet load_observations(const std::filesystem::path& path,
                                 const ObservationLoadOptions& options = {});

/// Merges co-located records; requires a grid. Exposed for generated sets.
ObservationSet upscale_to_blocks(ObservationSet obs, const GridSpec& grid);

void write_observations(const std::filesystem::path& path, const ObservationSet& obs);

}  // namespace pgu

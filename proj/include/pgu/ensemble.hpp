#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pgu/grid.hpp"

namespace pgu {

/// Opaque tagged blob carried after the ensemble payload (e.g. a fitted
/// Gaussianisation transform).
struct AuxSection {
  std::string tag;  // exactly 4 bytes
  std::vector<std::uint8_t> bytes;
  bool operator==(const AuxSection&) const = default;
};

/// n realizations x m variables x grid blocks, realization-major then
/// variable-major, x-fastest within a grid. Realizations are independent
/// slices: concurrent writers partitioned by realization need no locking.
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(GridSpec grid, std::size_t n_real, std::vector<std::string> names);

  const GridSpec& grid() const { return grid_; }
  std::size_t n_real() const { return n_real_; }
  std::size_t n_vars() const { return names_.size(); }
  std::size_t n_blocks() const { return grid_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  /// Index of a variable; throws DataError when absent.
  std::size_t var(const std::string& name) const;
  bool has_var(const std::string& name) const;

  std::span<double> field(std::size_t real, std::size_t var) {
    return {values_.data() + offset(real, var), grid_.size()};
  }
  std::span<const double> field(std::size_t real, std::size_t var) const {
    return {values_.data() + offset(real, var), grid_.size()};
  }
  double& at(std::size_t real, std::size_t var, std::size_t block) {
    return values_[offset(real, var) + block];
  }
  double at(std::size_t real, std::size_t var, std::size_t block) const {
    return values_[offset(real, var) + block];
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Appends a variable initialised to `fill` in every realization.
  std::size_t add_var(const std::string& name, double fill = 0.0);

  /// Rounds every value to binary32, matching what the on-disk payload keeps.
  void quantize_to_float();

  std::vector<AuxSection> aux;

  bool operator==(const Ensemble& other) const;

 private:
  std::size_t offset(std::size_t real, std::size_t var) const {
    return (real * names_.size() + var) * grid_.size();
  }

  GridSpec grid_;
  std::size_t n_real_ = 0;
  std::vector<std::string> names_;
  std::vector<double> values_;
};

/// FNV-1a over the bit patterns of the selected blocks of every field.
std::uint64_t checksum_blocks(const Ensemble& ens, std::span<const std::size_t> blocks);

}  // namespace pgu

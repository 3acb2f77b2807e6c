#pragma once

#include <array>
#include <vector>

#include "pgu/grid.hpp"

namespace pgu {

enum class StructureKind { spherical, exponential, gaussian };

/// One nested structure. Ranges are practical ranges along the rotated
/// axes (exponential and gaussian reach 95% of their sill there); angles are
/// ZXZ rotation angles in degrees.
struct VariogramStructure {
  StructureKind kind = StructureKind::spherical;
  double sill = 1.0;
  std::array<double, 3> ranges{1.0, 1.0, 1.0};
  std::array<double, 3> angles{0.0, 0.0, 0.0};
};

class VariogramModel {
 public:
  VariogramModel() = default;
  /// Throws ConfigError on negative nugget, non-positive sill or range.
  VariogramModel(double nugget, std::vector<VariogramStructure> structures);

  /// Isotropic single-structure model without nugget.
  static VariogramModel isotropic(StructureKind kind, double range, double sill = 1.0);

  double nugget() const { return nugget_; }
  const std::vector<VariogramStructure>& structures() const { return structures_; }
  double total_sill() const { return total_sill_; }

  double gamma(const Vec3& h) const;
  double covariance(const Vec3& h) const;
  double covariance(const Vec3& a, const Vec3& b) const {
    return covariance(Vec3{b[0] - a[0], b[1] - a[1], b[2] - a[2]});
  }

  /// Lag length normalised by the anisotropy of the dominant (largest-sill)
  /// structure; 1 means "at the range". Used to rank neighbours.
  double normalized_distance(const Vec3& h) const;

  bool operator==(const VariogramModel& o) const;

 private:
  struct Compiled {
    std::array<double, 9> transform;  // diag(1/ranges) * R^T, row-major
  };
  static double reduced_lag(const Compiled& c, const Vec3& h);

  double nugget_ = 0.0;
  std::vector<VariogramStructure> structures_;
  std::vector<Compiled> compiled_;
  std::size_t dominant_ = 0;
  double total_sill_ = 0.0;
};

/// Standardised correlation of one structure at reduced lag r (1 - f(r)).
double structure_correlation(StructureKind kind, double r);

}  // namespace pgu

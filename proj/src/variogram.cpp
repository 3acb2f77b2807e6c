#include "pgu/variogram.hpp"

#include <cmath>
#include <numbers>

#include "pgu/error.hpp"

namespace pgu {
namespace {

using Mat3 = std::array<double, 9>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[3 * i + j] += a[3 * i + k] * b[3 * k + j];
  return c;
}

Mat3 rot_z(double deg) {
  const double t = deg * std::numbers::pi / 180.0, c = std::cos(t), s = std::sin(t);
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

Mat3 rot_x(double deg) {
  const double t = deg * std::numbers::pi / 180.0, c = std::cos(t), s = std::sin(t);
  return {1, 0, 0, 0, c, -s, 0, s, c};
}

}  // namespace

double structure_correlation(StructureKind kind, double r) {
  switch (kind) {
    case StructureKind::spherical:
      return r >= 1.0 ? 0.0 : 1.0 - (1.5 * r - 0.5 * r * r * r);
    case StructureKind::exponential:
      return std::exp(-3.0 * r);
    case StructureKind::gaussian:
      return std::exp(-3.0 * r * r);
  }
  return 0.0;
}

VariogramModel::VariogramModel(double nugget, std::vector<VariogramStructure> structures)
    : nugget_(nugget), structures_(std::move(structures)) {
  if (!(nugget_ >= 0.0)) throw ConfigError("variogram: nugget must be >= 0");
  if (structures_.empty() && nugget_ == 0.0)
    throw ConfigError("variogram: model needs a nugget or at least one structure");
  total_sill_ = nugget_;
  double best = -1.0;
  for (std::size_t s = 0; s < structures_.size(); ++s) {
    const auto& st = structures_[s];
    if (!(st.sill > 0.0)) throw ConfigError("variogram: structure sill must be > 0");
    for (const double r : st.ranges)
      if (!(r > 0.0)) throw ConfigError("variogram: ranges must be > 0");
    // ZXZ rotation; lags are expressed in the rotated frame via R^T.
    const Mat3 rot = mul(mul(rot_z(st.angles[0]), rot_x(st.angles[1])), rot_z(st.angles[2]));
    Mat3 rt{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rt[3 * i + j] = rot[3 * j + i] / st.ranges[i];
    compiled_.push_back({rt});
    total_sill_ += st.sill;
    if (st.sill > best) {
      best = st.sill;
      dominant_ = s;
    }
  }
}

VariogramModel VariogramModel::isotropic(StructureKind kind, double range, double sill) {
  return VariogramModel(0.0, {VariogramStructure{kind, sill, {range, range, range}, {0, 0, 0}}});
}

double VariogramModel::reduced_lag(const Compiled& c, const Vec3& h) {
  const auto& t = c.transform;
  const double x = t[0] * h[0] + t[1] * h[1] + t[2] * h[2];
  const double y = t[3] * h[0] + t[4] * h[1] + t[5] * h[2];
  const double z = t[6] * h[0] + t[7] * h[1] + t[8] * h[2];
  return std::sqrt(x * x + y * y + z * z);
}

double VariogramModel::covariance(const Vec3& h) const {
  if (h[0] == 0.0 && h[1] == 0.0 && h[2] == 0.0) return total_sill_;
  double c = 0.0;
  for (std::size_t s = 0; s < structures_.size(); ++s) {
    c += structures_[s].sill * structure_correlation(structures_[s].kind, reduced_lag(compiled_[s], h));
  }
  return c;
}

double VariogramModel::gamma(const Vec3& h) const { return total_sill_ - covariance(h); }

double VariogramModel::normalized_distance(const Vec3& h) const {
  if (compiled_.empty()) return std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
  return reduced_lag(compiled_[dominant_], h);
}

bool VariogramModel::operator==(const VariogramModel& o) const {
  if (nugget_ != o.nugget_ || structures_.size() != o.structures_.size()) return false;
  for (std::size_t s = 0; s < structures_.size(); ++s) {
    const auto& a = structures_[s];
    const auto& b = o.structures_[s];
    if (a.kind != b.kind || a.sill != b.sill || a.ranges != b.ranges || a.angles != b.angles)
      return false;
  }
  return true;
}

}  // namespace pgu

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace pgu {

using Vec3 = std::array<double, 3>;

/// Regular block grid. `origin` is the centroid of block (0, 0, 0); block
/// linear index is ix + nx * (iy + ny * iz).
struct GridSpec {
  std::size_t nx = 1, ny = 1, nz = 1;
  double dx = 1.0, dy = 1.0, dz = 1.0;
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t size() const { return nx * ny * nz; }
  std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return ix + nx * (iy + ny * iz);
  }
  std::array<std::size_t, 3> coords(std::size_t index) const {
    return {index % nx, (index / nx) % ny, index / (nx * ny)};
  }
  Vec3 centroid(std::size_t index) const;
  /// Block containing the point, or nullopt outside the grid.
  std::optional<std::size_t> locate(const Vec3& p) const;

  /// Throws ConfigError when a count is zero or a size is not positive.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Sorted, deduplicated block indices.
struct BlockSubset {
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  bool contains(std::size_t block) const;
};

/// All blocks within Chebyshev block distance k of any of the seed blocks.
BlockSubset extract_neighbourhood(const GridSpec& grid, std::span<const std::size_t> seed_blocks,
                                  std::size_t k);

double distance(const Vec3& a, const Vec3& b);

}  // namespace pgu

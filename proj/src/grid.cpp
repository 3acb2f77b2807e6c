#include "pgu/grid.hpp"

#include <algorithm>
#include <cmath>

#include "pgu/error.hpp"

namespace pgu {

Vec3 GridSpec::centroid(std::size_t index) const {
  const auto [ix, iy, iz] = coords(index);
  return {origin[0] + dx * static_cast<double>(ix), origin[1] + dy * static_cast<double>(iy),
          origin[2] + dz * static_cast<double>(iz)};
}

std::optional<std::size_t> GridSpec::locate(const Vec3& p) const {
  const double fx = std::floor((p[0] - origin[0]) / dx + 0.5);
  const double fy = std::floor((p[1] - origin[1]) / dy + 0.5);
  const double fz = std::floor((p[2] - origin[2]) / dz + 0.5);
  if (!(fx >= 0 && fy >= 0 && fz >= 0)) return std::nullopt;
  if (fx >= static_cast<double>(nx) || fy >= static_cast<double>(ny) ||
      fz >= static_cast<double>(nz)) {
    return std::nullopt;
  }
  return index(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy),
               static_cast<std::size_t>(fz));
}

void GridSpec::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("grid: block counts must be >= 1");
  if (!(dx > 0 && dy > 0 && dz > 0)) throw ConfigError("grid: block sizes must be > 0");
}

bool BlockSubset::contains(std::size_t block) const {
  return std::binary_search(indices.begin(), indices.end(), block);
}

BlockSubset extract_neighbourhood(const GridSpec& grid, std::span<const std::size_t> seed_blocks,
                                  std::size_t k) {
  if (seed_blocks.empty()) throw DataError("extract_neighbourhood: empty observation set");
  std::vector<char> mark(grid.size(), 0);
  const auto lo = [k](std::size_t c) { return c >= k ? c - k : 0; };
  const auto hi = [k](std::size_t c, std::size_t n) { return std::min(n - 1, c + k); };
  for (const std::size_t b : seed_blocks) {
    const auto [ix, iy, iz] = grid.coords(b);
    for (std::size_t z = lo(iz); z <= hi(iz, grid.nz); ++z)
      for (std::size_t y = lo(iy); y <= hi(iy, grid.ny); ++y)
        for (std::size_t x = lo(ix); x <= hi(ix, grid.nx); ++x) mark[grid.index(x, y, z)] = 1;
  }
  BlockSubset out;
  for (std::size_t i = 0; i < mark.size(); ++i)
    if (mark[i]) out.indices.push_back(i);
  return out;
}

double distance(const Vec3& a, const Vec3& b) {
  const double x = a[0] - b[0], y = a[1] - b[1], z = a[2] - b[2];
  return std::sqrt(x * x + y * y + z * z);
}

}  // namespace pgu

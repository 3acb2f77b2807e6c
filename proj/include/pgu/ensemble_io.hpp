#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pgu/ensemble.hpp"

namespace pgu {

inline constexpr std::uint16_t kEnsembleFormatVersion = 1;

/// Binary layout (little endian):
///   "PGUE" | version u16 | n_real u32 | n_vars u16 | nx u32 | ny u32 | nz u32
///   | per variable: name length u8, UTF-8 bytes
///   | payload f32, realization-major, variable-major, x-fastest
///   | zero or more aux sections: tag[4] | length u64 | bytes
void write_ensemble(const std::filesystem::path& path, const Ensemble& ens);

/// Reads an ensemble; with `bound` the block counts must match and the
/// returned ensemble carries the bound grid's geometry.
Ensemble read_ensemble(const std::filesystem::path& path,
                       const std::optional<GridSpec>& bound = std::nullopt);

/// nz*ny rows of nx comma-separated values (row = iy + ny*iz).
void write_raster_csv(const std::filesystem::path& path, const GridSpec& grid,
                      std::span<const double> values);

/// Inverse of write_raster_csv; throws DataError on a shape mismatch or an
/// unparsable cell.
std::vector<double> read_raster_csv(const std::filesystem::path& path, const GridSpec& grid);

/// 16-bit binary PGM, nx wide and nz*ny tall, linearly scaled from [lo, hi]
/// (defaults to the data range).
void write_raster_pgm(const std::filesystem::path& path, const GridSpec& grid,
                      std::span<const double> values, std::optional<double> lo = std::nullopt,
                      std::optional<double> hi = std::nullopt);

}  // namespace pgu

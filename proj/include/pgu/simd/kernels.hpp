#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// SIMD variants (AVX2+FMA on x86-64, NEON on AArch64) selected at runtime.
// Setting PGU_SIMD=scalar in the environment forces the reference kernels.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pgu {

/// Axis-aligned cell [lo1, hi1) x [lo2, hi2) of the two-GRF plane.
struct Rect {
  double lo1, hi1, lo2, hi2;
};

}  // namespace pgu

namespace pgu::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// y *= x elementwise
  void (*hadamard)(double* y, const double* x, std::size_t n);
  /// out[i] = Gaspari-Cohn taper of d[i] * inv_radius
  void (*gaspari_cohn)(const double* d, double inv_radius, double* out, std::size_t n);
  /// sum (a[i] - b[i])^2
  double (*squared_error_sum)(const double* a, const double* b, std::size_t n);
  /// out[i] = index of the rect containing (g1[i], g2[i]), or -1
  void (*truncate)(const double* g1, const double* g2, std::size_t n, const Rect* rects,
                   std::size_t n_rects, std::int32_t* out);
};

bool available(Isa isa);
const KernelTable& table(Isa isa);
/// Best available table, or the scalar one when PGU_SIMD=scalar.
const KernelTable& active();
std::string_view name(Isa isa);

const KernelTable& scalar_table();
#if defined(PGU_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(PGU_HAVE_NEON)
const KernelTable& neon_table();
#endif

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), y.size());
}
inline void hadamard(std::span<double> y, std::span<const double> x) {
  active().hadamard(y.data(), x.data(), y.size());
}
inline void gaspari_cohn(std::span<const double> d, double radius, std::span<double> out) {
  active().gaspari_cohn(d.data(), 1.0 / radius, out.data(), d.size());
}
inline double squared_error_sum(std::span<const double> a, std::span<const double> b) {
  return active().squared_error_sum(a.data(), b.data(), a.size());
}
inline void truncate(std::span<const double> g1, std::span<const double> g2,
                     std::span<const Rect> rects, std::span<std::int32_t> out) {
  active().truncate(g1.data(), g2.data(), g1.size(), rects.data(), rects.size(), out.data());
}

}  // namespace pgu::simd

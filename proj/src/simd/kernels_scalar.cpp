#include "pgu/simd/kernels.hpp"

#include <algorithm>

namespace pgu::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void hadamard_scalar(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

// Canonical Gaspari-Cohn fifth-order piecewise rational function, support 2.
double gc_one(double r) {
  if (r >= 2.0) return 0.0;
  double v;
  if (r <= 1.0) {
    v = ((((-0.25 * r + 0.5) * r + 0.625) * r - 5.0 / 3.0) * r) * r + 1.0;
  } else {
    v = (((((1.0 / 12.0) * r - 0.5) * r + 0.625) * r + 5.0 / 3.0) * r - 5.0) * r + 4.0 -
        2.0 / (3.0 * r);
  }
  return std::clamp(v, 0.0, 1.0);
}

void gaspari_cohn_scalar(const double* d, double inv_radius, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = gc_one(d[i] * inv_radius);
}

double squared_error_sum_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return s;
}

void truncate_scalar(const double* g1, const double* g2, std::size_t n, const Rect* rects,
                     std::size_t n_rects, std::int32_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    std::int32_t label = -1;
    for (std::size_t k = 0; k < n_rects; ++k) {
      const Rect& r = rects[k];
      if (g1[i] >= r.lo1 && g1[i] < r.hi1 && g2[i] >= r.lo2 && g2[i] < r.hi2) {
        label = static_cast<std::int32_t>(k);
        break;
      }
    }
    out[i] = label;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar,        dot_scalar,
                                 axpy_scalar,        hadamard_scalar,
                                 gaspari_cohn_scalar, squared_error_sum_scalar,
                                 truncate_scalar};
  return table;
}

}  // namespace pgu::simd

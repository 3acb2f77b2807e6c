// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>

#include "pgu/simd/kernels.hpp"

namespace pgu::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void hadamard_avx2(double* y, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] *= x[i];
}

inline __m256d gc4(__m256d r) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d zero = _mm256_setzero_pd();
  // Inner branch, 0 <= r <= 1.
  __m256d p = _mm256_set1_pd(-0.25);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.625));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(-5.0 / 3.0));
  p = _mm256_mul_pd(p, r);
  p = _mm256_fmadd_pd(p, r, one);
  // Outer branch, 1 < r < 2. r is clamped to >= 1 so the reciprocal stays finite.
  const __m256d ro = _mm256_max_pd(r, one);
  __m256d q = _mm256_set1_pd(1.0 / 12.0);
  q = _mm256_fmadd_pd(q, ro, _mm256_set1_pd(-0.5));
  q = _mm256_fmadd_pd(q, ro, _mm256_set1_pd(0.625));
  q = _mm256_fmadd_pd(q, ro, _mm256_set1_pd(5.0 / 3.0));
  q = _mm256_fmadd_pd(q, ro, _mm256_set1_pd(-5.0));
  q = _mm256_fmadd_pd(q, ro, _mm256_set1_pd(4.0));
  q = _mm256_sub_pd(q, _mm256_div_pd(_mm256_set1_pd(2.0), _mm256_mul_pd(_mm256_set1_pd(3.0), ro)));
  const __m256d inner = _mm256_cmp_pd(r, one, _CMP_LE_OQ);
  __m256d v = _mm256_blendv_pd(q, p, inner);
  v = _mm256_min_pd(_mm256_max_pd(v, zero), one);
  const __m256d outside = _mm256_cmp_pd(r, two, _CMP_GE_OQ);
  return _mm256_blendv_pd(v, zero, outside);
}

double gc_one(double r) {
  alignas(32) double buf[4] = {r, r, r, r};
  _mm256_store_pd(buf, gc4(_mm256_load_pd(buf)));
  return buf[0];
}

void gaspari_cohn_avx2(const double* d, double inv_radius, double* out, std::size_t n) {
  const __m256d s = _mm256_set1_pd(inv_radius);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, gc4(_mm256_mul_pd(_mm256_loadu_pd(d + i), s)));
  }
  for (; i < n; ++i) out[i] = gc_one(d[i] * inv_radius);
}

double squared_error_sum_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(e, e, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return s;
}

void truncate_avx2(const double* g1, const double* g2, std::size_t n, const Rect* rects,
                   std::size_t n_rects, std::int32_t* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(g1 + i);
    const __m256d y = _mm256_loadu_pd(g2 + i);
    __m256d label = _mm256_set1_pd(-1.0);
    // Reverse order so the first matching rect wins, as in the scalar kernel.
    for (std::size_t k = n_rects; k-- > 0;) {
      const Rect& r = rects[k];
      __m256d m = _mm256_and_pd(_mm256_cmp_pd(x, _mm256_set1_pd(r.lo1), _CMP_GE_OQ),
                                _mm256_cmp_pd(x, _mm256_set1_pd(r.hi1), _CMP_LT_OQ));
      m = _mm256_and_pd(m, _mm256_cmp_pd(y, _mm256_set1_pd(r.lo2), _CMP_GE_OQ));
      m = _mm256_and_pd(m, _mm256_cmp_pd(y, _mm256_set1_pd(r.hi2), _CMP_LT_OQ));
      label = _mm256_blendv_pd(label, _mm256_set1_pd(static_cast<double>(k)), m);
    }
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), _mm256_cvtpd_epi32(label));
  }
  for (; i < n; ++i) {
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

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::avx2,        dot_avx2,
                                 axpy_avx2,        hadamard_avx2,
                                 gaspari_cohn_avx2, squared_error_sum_avx2,
                                 truncate_avx2};
  return table;
}

}  // namespace pgu::simd

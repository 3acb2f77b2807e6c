// AArch64 only; NEON is architecturally guaranteed there.
#include <arm_neon.h>

#include <algorithm>

#include "pgu/simd/kernels.hpp"

namespace pgu::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void hadamard_neon(double* y, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] *= x[i];
}

inline float64x2_t gc2(float64x2_t r) {
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t p = vdupq_n_f64(-0.25);
  p = vfmaq_f64(vdupq_n_f64(0.5), p, r);
  p = vfmaq_f64(vdupq_n_f64(0.625), p, r);
  p = vfmaq_f64(vdupq_n_f64(-5.0 / 3.0), p, r);
  p = vmulq_f64(p, r);
  p = vfmaq_f64(one, p, r);
  const float64x2_t ro = vmaxq_f64(r, one);
  float64x2_t q = vdupq_n_f64(1.0 / 12.0);
  q = vfmaq_f64(vdupq_n_f64(-0.5), q, ro);
  q = vfmaq_f64(vdupq_n_f64(0.625), q, ro);
  q = vfmaq_f64(vdupq_n_f64(5.0 / 3.0), q, ro);
  q = vfmaq_f64(vdupq_n_f64(-5.0), q, ro);
  q = vfmaq_f64(vdupq_n_f64(4.0), q, ro);
  q = vsubq_f64(q, vdivq_f64(vdupq_n_f64(2.0), vmulq_f64(vdupq_n_f64(3.0), ro)));
  float64x2_t v = vbslq_f64(vcleq_f64(r, one), p, q);
  v = vminq_f64(vmaxq_f64(v, vdupq_n_f64(0.0)), one);
  return vbslq_f64(vcgeq_f64(r, vdupq_n_f64(2.0)), vdupq_n_f64(0.0), v);
}

void gaspari_cohn_neon(const double* d, double inv_radius, double* out, std::size_t n) {
  const float64x2_t s = vdupq_n_f64(inv_radius);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, gc2(vmulq_f64(vld1q_f64(d + i), s)));
  for (; i < n; ++i) out[i] = vgetq_lane_f64(gc2(vdupq_n_f64(d[i] * inv_radius)), 0);
}

double squared_error_sum_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t e = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, e, e);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void truncate_neon(const double* g1, const double* g2, std::size_t n, const Rect* rects,
                   std::size_t n_rects, std::int32_t* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(g1 + i);
    const float64x2_t y = vld1q_f64(g2 + i);
    float64x2_t label = vdupq_n_f64(-1.0);
    for (std::size_t k = n_rects; k-- > 0;) {
      const Rect& r = rects[k];
      uint64x2_t m = vandq_u64(vcgeq_f64(x, vdupq_n_f64(r.lo1)), vcltq_f64(x, vdupq_n_f64(r.hi1)));
      m = vandq_u64(m, vcgeq_f64(y, vdupq_n_f64(r.lo2)));
      m = vandq_u64(m, vcltq_f64(y, vdupq_n_f64(r.hi2)));
      label = vbslq_f64(m, vdupq_n_f64(static_cast<double>(k)), label);
    }
    out[i] = static_cast<std::int32_t>(vgetq_lane_f64(label, 0));
    out[i + 1] = static_cast<std::int32_t>(vgetq_lane_f64(label, 1));
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

const KernelTable& neon_table() {
  static const KernelTable table{Isa::neon,        dot_neon,
                                 axpy_neon,        hadamard_neon,
                                 gaspari_cohn_neon, squared_error_sum_neon,
                                 truncate_neon};
  return table;
}

}  // namespace pgu::simd

#include <arm_neon.h>

#include "potflow/kernels.hpp"

namespace potflow::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpay_neon(const double* x, double a, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), va, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void hadamard_neon(const double* d, const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(vld1q_f64(d + i), vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = d[i] * x[i];
}

void spmv_neon(const CsrView& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    std::int64_t k = a.row_ptr[r];
    const std::int64_t e = a.row_ptr[r + 1];
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; k + 2 <= e; k += 2) {
      const double pair[2] = {x[a.col[k]], x[a.col[k + 1]]};
      acc = vfmaq_f64(acc, vld1q_f64(a.val + k), vld1q_f64(pair));
    }
    double s = vaddvq_f64(acc);
    for (; k < e; ++k) s += a.val[k] * x[a.col[k]];
    y[r] = s;
  }
}

void cell_gradients_neon(const CellGeometry& g, const double* phi, double* out, std::size_t begin,
                         std::size_t end) {
  for (std::size_t c = begin; c < end; ++c) {
    const std::int32_t* v = g.vertex + 4 * c;
    const double* gl = g.grad_lambda + 16 * c;
    float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
    for (int i = 0; i < 4; ++i) {
      const float64x2_t p = vdupq_n_f64(phi[v[i]]);
      lo = vfmaq_f64(lo, p, vld1q_f64(gl + 4 * i));
      hi = vfmaq_f64(hi, p, vld1q_f64(gl + 4 * i + 2));
    }
    vst1q_f64(out + 4 * c, lo);
    vst1q_f64(out + 4 * c + 2, hi);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable t{dot_neon, axpy_neon, xpay_neon, hadamard_neon, spmv_neon,
                             cell_gradients_neon};
  return t;
}

}  // namespace potflow::kernels

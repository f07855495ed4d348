#include "potflow/kernels.hpp"

namespace potflow::kernels {
namespace {

double dot_ref(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_ref(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay_ref(const double* x, double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void hadamard_ref(const double* d, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = d[i] * x[i];
}

void spmv_ref(const CsrView& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    double s = 0.0;
    for (std::int64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) s += a.val[k] * x[a.col[k]];
    y[r] = s;
  }
}

void cell_gradients_ref(const CellGeometry& g, const double* phi, double* out, std::size_t begin,
                        std::size_t end) {
  for (std::size_t c = begin; c < end; ++c) {
    const std::int32_t* v = g.vertex + 4 * c;
    const double* gl = g.grad_lambda + 16 * c;
    double* o = out + 4 * c;
    for (int k = 0; k < 4; ++k) o[k] = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double p = phi[v[i]];
      for (int k = 0; k < 4; ++k) o[k] += p * gl[4 * i + k];
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{dot_ref, axpy_ref, xpay_ref, hadamard_ref, spmv_ref,
                             cell_gradients_ref};
  return t;
}

}  // namespace potflow::kernels

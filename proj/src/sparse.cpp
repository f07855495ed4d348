#include "potflow/sparse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "potflow/errors.hpp"

namespace potflow {

std::int64_t CsrMatrix::find(std::size_t r, std::int32_t c) const {
  const auto b = col.begin() + row_ptr[r], e = col.begin() + row_ptr[r + 1];
  const auto it = std::lower_bound(b, e, c);
  return (it != e && *it == c) ? it - col.begin() : -1;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto k = find(r, static_cast<std::int32_t>(r));
    if (k >= 0) d[r] = val[k];
  }
  return d;
}

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(n);
  kernels::active().spmv(view(), x.data(), y.data());
}

double CsrMatrix::asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (auto k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const auto t = find(col[k], static_cast<std::int32_t>(r));
      worst = std::max(worst, std::abs(val[k] - (t >= 0 ? val[t] : 0.0)));
    }
  return worst;
}

namespace {
std::atomic<std::uint64_t> curvature_counter{0};
}  // namespace

std::uint64_t curvature_events() { return curvature_counter.load(); }

CgResult pcg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
             double rel_tol, int max_iter) {
  const auto& k = kernels::active();
  const std::size_t n = a.n;
  x.resize(n, 0.0);
  std::vector<double> inv_diag = a.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) {
      ++curvature_counter;
      throw CurvatureError("nonpositive diagonal entry in the Hessian");
    }
    d = 1.0 / d;
  }
  std::vector<double> r(n), z(n), p(n), ap(n);
  a.multiply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double bnorm = std::sqrt(k.dot(b.data(), b.data(), n));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0, true};
  }
  k.hadamard(inv_diag.data(), r.data(), z.data(), n);
  p = z;
  double rz = k.dot(r.data(), z.data(), n);
  double rnorm = std::sqrt(k.dot(r.data(), r.data(), n));
  int it = 0;
  while (rnorm > rel_tol * bnorm && it < max_iter) {
    a.multiply(p, ap);
    const double pap = k.dot(p.data(), ap.data(), n);
    if (!(pap > 0.0)) {
      ++curvature_counter;
      throw CurvatureError("conjugate gradient met nonpositive curvature p^T A p = " +
                           std::to_string(pap) + " at iteration " + std::to_string(it));
    }
    const double alpha = rz / pap;
    k.axpy(alpha, p.data(), x.data(), n);
    k.axpy(-alpha, ap.data(), r.data(), n);
    k.hadamard(inv_diag.data(), r.data(), z.data(), n);
    const double rz_new = k.dot(r.data(), z.data(), n);
    k.xpay(z.data(), rz_new / rz, p.data(), n);
    rz = rz_new;
    rnorm = std::sqrt(k.dot(r.data(), r.data(), n));
    ++it;
  }
  return {it, rnorm / bnorm, rnorm <= rel_tol * bnorm};
}

}  // namespace potflow

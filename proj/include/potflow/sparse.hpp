#pragma once

#include <cstdint>
#include <vector>

#include "potflow/kernels.hpp"

namespace potflow {

/// Square CSR matrix with sorted column indices in each row.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;

  kernels::CsrView view() const { return {n, row_ptr.data(), col.data(), val.data()}; }
  /// Position of (r, c) in val, or -1.
  std::int64_t find(std::size_t r, std::int32_t c) const;
  std::vector<double> diagonal() const;
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  /// max |A_ij - A_ji|.
  double asymmetry() const;
};

struct CgResult {
  int iterations;
  double relative_residual;
  bool converged;
};

/// Nonpositive-curvature events detected by pcg in this process.
std::uint64_t curvature_events();

/// Conjugate gradients with a Jacobi preconditioner for A x = b, starting
/// from x. Stops when ||r|| <= rel_tol ||b|| or after max_iter steps. Throws
/// CurvatureError when a search direction has p^T A p <= 0.
CgResult pcg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
             double rel_tol, int max_iter);

}  // namespace potflow

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace potflow::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// Compressed sparse row view; column indices are 32-bit.
struct CsrView {
  std::size_t rows;
  const std::int64_t* row_ptr;
  const std::int32_t* col;
  const double* val;
};

/// Per-cell data for the gradient gather. Every cell has four vertex slots
/// and a 4x4 block of basis gradients (row i = grad lambda_i, padded with a
/// zero fourth component). Unused slots in 2D point at a valid vertex and
/// carry a zero row.
struct CellGeometry {
  std::size_t cells;
  const std::int32_t* vertex;  // 4 per cell
  const double* grad_lambda;   // 16 per cell
};

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += a x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// y = x + a y
  void (*xpay)(const double* x, double a, double* y, std::size_t n);
  /// y = d .* x
  void (*hadamard)(const double* d, const double* x, double* y, std::size_t n);
  /// y = A x
  void (*spmv)(const CsrView& a, const double* x, double* y);
  /// out[4c .. 4c+3] = sum_i phi[vertex_i] grad lambda_i over cells [begin, end)
  void (*cell_gradients)(const CellGeometry& g, const double* phi, double* out,
                         std::size_t begin, std::size_t end);
};

const KernelTable& scalar_table();
#if defined(POTFLOW_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(POTFLOW_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// True when the ISA was compiled in and the running CPU supports it.
bool available(Isa isa);
/// Kernels for a given ISA; throws std::invalid_argument when unavailable.
const KernelTable& table(Isa isa);

/// Best available ISA, unless the POTFLOW_ISA environment variable
/// ("scalar", "avx2", "neon") selects another. Resolved once.
Isa active_isa();
const KernelTable& active();

}  // namespace potflow::kernels

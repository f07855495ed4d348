#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "potflow/exterior_mesh.hpp"
#include "potflow/kernels.hpp"

using namespace potflow;
using namespace potflow::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0, s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(a[i]));
  }
  return m / std::max(s, 1e-300);
}

struct RandomCsr {
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;
  CsrView view() const { return {row_ptr.size() - 1, row_ptr.data(), col.data(), val.data()}; }
};

RandomCsr random_csr(std::size_t n, std::mt19937_64& rng) {
  RandomCsr m;
  std::uniform_int_distribution<int> len(0, 17);
  std::uniform_int_distribution<std::int32_t> c(0, static_cast<std::int32_t>(n - 1));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = len(rng);
    for (int j = 0; j < k; ++j) {
      m.col.push_back(c(rng));
      m.val.push_back(u(rng));
    }
    m.row_ptr.push_back(static_cast<std::int64_t>(m.col.size()));
  }
  return m;
}

// Checks every kernel of `t` against straightforward loops.
void check_table(const KernelTable& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 31u, 1000u, 4099u}) {
    const auto x = random_vec(n, rng), y = random_vec(n, rng);
    double ref = 0, mag = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ref += x[i] * y[i];
      mag += std::abs(x[i] * y[i]);
    }
    CHECK(std::abs(t.dot(x.data(), y.data(), n) - ref) <= 1e-14 * (1 + mag));

    auto z = y, zr = y;
    t.axpy(0.37, x.data(), z.data(), n);
    for (std::size_t i = 0; i < n; ++i) zr[i] += 0.37 * x[i];
    if (n) CHECK(max_rel(z, zr) < 1e-15);

    z = y;
    zr = y;
    t.xpay(x.data(), -1.3, z.data(), n);
    for (std::size_t i = 0; i < n; ++i) zr[i] = x[i] - 1.3 * zr[i];
    if (n) CHECK(max_rel(z, zr) < 1e-15);

    std::vector<double> h(n), hr(n);
    t.hadamard(x.data(), y.data(), h.data(), n);
    for (std::size_t i = 0; i < n; ++i) hr[i] = x[i] * y[i];
    CHECK(h == hr);
  }

  for (std::size_t n : {1u, 5u, 64u, 777u}) {
    const auto m = random_csr(n, rng);
    const auto x = random_vec(n, rng);
    std::vector<double> y(n), yr(n, 0.0);
    t.spmv(m.view(), x.data(), y.data());
    for (std::size_t i = 0; i < n; ++i)
      for (auto k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) yr[i] += m.val[k] * x[m.col[k]];
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - yr[i]) < 1e-14 * 18);
  }
}

// Cell gradients on a real mesh against a direct evaluation.
void check_gradients(const KernelTable& t, int dim) {
  const ExteriorMesh mesh = dim == 2 ? generate_annulus_2d(1.0, 5.0, 6, 17, 1.1)
                                     : generate_shell_3d(1.0, 4.0, 1, 3, 1.0);
  const std::size_t nc = mesh.num_cells();
  std::vector<std::int32_t> vertex(4 * nc);
  std::vector<double> gl(16 * nc, 0.0);
  const int nv = mesh.vertices_per_cell();
  for (std::size_t c = 0; c < nc; ++c) {
    std::array<Vec3, 4> p{};
    for (int i = 0; i < nv; ++i) p[i] = mesh.vertices()[mesh.cells()[c][i]];
    for (int i = 0; i < 4; ++i) vertex[4 * c + i] = mesh.cells()[c][i < nv ? i : 0];
    // Barycentric gradients from the inverse of the edge matrix.
    if (dim == 2) {
      const Vec3 e1 = p[1] - p[0], e2 = p[2] - p[0];
      const double det = e1[0] * e2[1] - e1[1] * e2[0];
      const Vec3 g1{e2[1] / det, -e2[0] / det, 0}, g2{-e1[1] / det, e1[0] / det, 0};
      const Vec3 g0 = -1.0 * (g1 + g2);
      const Vec3 g[3] = {g0, g1, g2};
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) gl[16 * c + 4 * i + k] = g[i][k];
    } else {
      const Vec3 e1 = p[1] - p[0], e2 = p[2] - p[0], e3 = p[3] - p[0];
      const double det = dot(e1, cross(e2, e3));
      const Vec3 g1 = (1.0 / det) * cross(e2, e3), g2 = (1.0 / det) * cross(e3, e1),
                 g3 = (1.0 / det) * cross(e1, e2);
      const Vec3 g0 = -1.0 * (g1 + g2 + g3);
      const Vec3 g[4] = {g0, g1, g2, g3};
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 3; ++k) gl[16 * c + 4 * i + k] = g[i][k];
    }
  }
  std::vector<double> phi(mesh.num_vertices());
  for (std::size_t v = 0; v < phi.size(); ++v) {
    const Vec3& x = mesh.vertices()[v];
    phi[v] = 0.7 * x[0] - 0.2 * x[1] + 0.4 * x[2] + 0.05 * x[0] * x[1];
  }
  const CellGeometry geo{nc, vertex.data(), gl.data()};
  std::vector<double> out(4 * nc, -1.0);
  t.cell_gradients(geo, phi.data(), out.data(), 0, nc / 2);
  t.cell_gradients(geo, phi.data(), out.data(), nc / 2, nc);
  for (std::size_t c = 0; c < nc; ++c) {
    Vec3 ref{0, 0, 0};
    for (int i = 0; i < nv; ++i)
      for (int k = 0; k < 3; ++k) ref[k] += phi[vertex[4 * c + i]] * gl[16 * c + 4 * i + k];
    for (int k = 0; k < 3; ++k) CHECK(std::abs(out[4 * c + k] - ref[k]) < 1e-12);
  }
}

}  // namespace

TEST_CASE("environment override selects the scalar kernels") {
  // active_isa() is resolved once, so this must run before anything else
  // touches the dispatcher.
  setenv("POTFLOW_ISA", "scalar", 1);
  CHECK(active_isa() == Isa::Scalar);
  CHECK(&active() == &scalar_table());
  CHECK(isa_name(Isa::Scalar) == "scalar");
}

TEST_CASE("scalar kernels") {
  check_table(scalar_table(), 1);
  check_gradients(scalar_table(), 2);
  check_gradients(scalar_table(), 3);
}

TEST_CASE("unavailable ISA is rejected") {
  for (Isa isa : {Isa::Avx2, Isa::Neon})
    if (!available(isa)) CHECK_THROWS_AS(table(isa), std::invalid_argument);
  CHECK(available(Isa::Scalar));
}

TEST_CASE("SIMD kernels match the scalar reference") {
  bool ran = false;
#if defined(POTFLOW_HAVE_AVX2)
  if (available(Isa::Avx2)) {
    check_table(avx2_table(), 2);
    check_gradients(avx2_table(), 2);
    check_gradients(avx2_table(), 3);
    std::mt19937_64 rng(3);
    const auto x = random_vec(5003, rng), y = random_vec(5003, rng);
    const double a = scalar_table().dot(x.data(), y.data(), x.size());
    const double b = avx2_table().dot(x.data(), y.data(), x.size());
    CHECK(std::abs(a - b) < 1e-12);
    ran = true;
  }
#endif
#if defined(POTFLOW_HAVE_NEON)
  if (available(Isa::Neon)) {
    check_table(neon_table(), 2);
    check_gradients(neon_table(), 2);
    check_gradients(neon_table(), 3);
    ran = true;
  }
#endif
  if (!ran) MESSAGE("no SIMD variant available on this machine");
}

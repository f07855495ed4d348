#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "potflow/cutoff.hpp"
#include "potflow/errors.hpp"

using namespace potflow;
using doctest::Approx;

namespace {
GasLaw g2() { return GasLaw::gamma_law(1.0, 2.0); }
}  // namespace

TEST_CASE("plateau constant") {
  CHECK(plateau_constant(g2(), {0.0, 0.0}, 0.1) == Approx(0.73).epsilon(1e-12));
  const double iso = plateau_constant(GasLaw::isothermal(1.0), {0.5, 0.5}, 0.1);
  CHECK(iso == Approx(std::exp(0.5 - 0.405)).epsilon(1e-12));

  // Brute force over 1e5 samples on a range where the sup is interior.
  const auto law = GasLaw::gamma_law(1.0, 1.4);
  const PsiRange r{-1.0, 3.0};
  const double theta = 0.05;
  double brute = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double w = r.min + (r.max - r.min) * i / 99999.0;
    const double q = law.critical_speed(w);
    brute = std::max(brute, law.h_inv(w - 0.5 * (1 - theta) * (1 - theta) * q * q));
  }
  CHECK(std::abs(plateau_constant(law, r, theta) - brute) < 1e-8);
}

TEST_CASE("rho_tilde branch values") {
  const CutoffDensity c(g2(), {0.0, 0.0}, 0.1);
  auto e = c.rho_tilde(0.25, 0.0);
  CHECK(e.value == Approx(0.9375).epsilon(1e-14));
  CHECK(e.dv == Approx(-0.25).epsilon(1e-14));
  CHECK(e.dw == Approx(0.5).epsilon(1e-14));
  e = c.rho_tilde(2.0, 0.0);
  CHECK(e.value == Approx(0.73).epsilon(1e-12));
  CHECK(e.dv == 0.0);
  CHECK(e.dw == 0.0);
  CHECK(c.rho_tilde(0.0, 0.0).value == Approx(1.0));
  CHECK(c.local(0.0).v2() == Approx(1.08));
  CHECK_THROWS_AS(c.rho_tilde(0.1, 0.5), DomainError);
}

TEST_CASE("energy integrand") {
  const CutoffDensity c(g2(), {0.0, 0.0}, 0.1);
  auto g = c.G(0.0, 0.0);
  CHECK(g.G == 0.0);
  CHECK(g.G_v == Approx(0.5));
  CHECK(g.G_vw == Approx(0.25));
  g = c.G(0.25, 0.0);
  CHECK(g.G == Approx(0.12109375).epsilon(1e-14));
  CHECK(g.G_v == Approx(0.46875).epsilon(1e-14));
  const double quad = 0.5 * oracle::integrate([](double v) { return 1.0 - v / 4.0; }, 0.0, 0.25);
  CHECK(g.G == Approx(quad).epsilon(1e-13));

  // Across all three branches against adaptive quadrature of rho~.
  for (double L : {0.5, 0.9, 1.0, 1.07, 1.5, 3.0}) {
    const double ref =
        0.5 * oracle::integrate([&](double v) { return c.rho_tilde(v, 0.0).value; }, 0.0, L, 1e-12);
    CHECK(c.G(L, 0.0).G == Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("coefficient matrix") {
  const CutoffDensity c(g2(), {0.0, 0.0}, 0.1);
  auto m = c.coeff_matrix({0.0, 0.0, 0.0}, 0.0);
  CHECK(m.a[0][0] == Approx(1.0));
  CHECK(m.a[1][1] == Approx(1.0));
  CHECK(m.a[0][1] == 0.0);
  m = c.coeff_matrix({0.5, 0.0, 0.0}, 0.0);
  CHECK(m.a[0][0] == Approx(0.8125).epsilon(1e-14));
  CHECK(m.a[1][1] == Approx(0.9375).epsilon(1e-14));
  CHECK(m.rho_w == Approx(0.5));
  m = c.coeff_matrix({1.0, 1.0, 0.0}, 0.0);
  CHECK(m.a[0][0] == Approx(0.73));
  CHECK(m.a[0][1] == 0.0);
  CHECK(m.a[1][1] == Approx(0.73));
}

TEST_CASE("ellipticity scan") {
  const CutoffDensity c(g2(), {0.0, 0.0}, 0.1);
  auto b = ellipticity_scan(c, ScanGrid{0.0, 0.85, 200, 1});
  // The dense connection-band pass is outside [0, 0.85]; the minimum is the
  // along-flow eigenvalue at v = 0.85.
  CHECK(b.lambda_min == Approx(0.3625).epsilon(1e-12));
  b = ellipticity_scan(c, ScanGrid{1.2, 4.0, 50, 1});
  CHECK(b.lambda_min == Approx(0.73));
  CHECK(b.lambda_max == Approx(0.73));
  b = ellipticity_scan(c, ScanGrid{});
  CHECK(b.lambda_min > 0.0);
  MESSAGE("full-grid lambda_min (gamma 2, theta 0.1): " << b.lambda_min);

  for (double theta : {0.1, 0.05, 0.025}) {
    for (const auto& law : {GasLaw::gamma_law(1.0, 2.0), GasLaw::gamma_law(1.0, 1.4),
                            GasLaw::isothermal(1.0)}) {
      const CutoffDensity cd(law, {-0.5, 1.0}, theta);
      CHECK(ellipticity_scan(cd, ScanGrid{}).lambda_min > 0.0);
    }
  }
}

TEST_CASE("properties on random samples") {
  const auto law = GasLaw::gamma_law(1.0, 1.4);
  const PsiRange range{-0.5, 1.5};
  for (double theta : {0.1, 0.05, 0.025}) {
    const CutoffDensity c(law, range, theta);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uw(range.min, range.max), u01(0.0, 1.0);

    // Physical branch agreement.
    for (int i = 0; i < 1000; ++i) {
      const double w = uw(rng);
      const double q1 = (1 - 2 * theta) * law.critical_speed(w);
      const double v = q1 * q1 * u01(rng);
      CHECK(std::abs(c.rho_tilde(v, w).value - law.h_inv(w - 0.5 * v)) < 1e-12);
    }

    // C1 across junctions.
    for (int i = 0; i < 20; ++i) {
      const double w = uw(rng);
      const LocalCutoff lc = c.local(w);
      // The connection curves sharply when the plateau sits far above the
      // local density, so the step must be small.
      const double d = 1e-8;
      for (double vj : {lc.v1(), lc.v2()}) {
        auto f = [&](double v) { return lc.eval(v).value; };
        const double f0 = f(vj);
        const double left = (f0 - f(vj - d)) / d;
        const double right = (f(vj + d) - f0) / d;
        CHECK(std::abs(left - right) < 1e-6);
        CHECK(std::abs(lc.eval(vj - 1e-12).value - lc.eval(vj + 1e-12).value) < 1e-9);
      }
    }

    // Partial derivatives against finite differences.
    const double vmax = 2.0 * std::pow(law.critical_speed(range.max), 2);
    for (int i = 0; i < 1000; ++i) {
      const double w = range.min + 0.02 + (range.max - range.min - 0.04) * u01(rng);
      const double v = 0.01 + vmax * u01(rng);
      const auto e = c.rho_tilde(v, w);
      const LocalCutoff lc = c.local(w);
      if (std::min(std::abs(v - lc.v1()), std::abs(v - lc.v2())) < 1e-3) continue;
      const double fdv = oracle::derivative([&](double x) { return c.rho_tilde(x, w).value; }, v, 1e-5);
      const double fdw = oracle::derivative([&](double x) { return c.rho_tilde(v, x).value; }, w, 1e-4);
      CHECK(std::abs(e.dv - fdv) <= 1e-6 * std::max(1.0, std::abs(fdv)));
      CHECK(std::abs(e.dw - fdw) <= 1e-6 * std::max(1.0, std::abs(fdw)));
    }

    // G_v = rho~ / 2.
    for (int i = 0; i < 200; ++i) {
      const double w = uw(rng);
      const double L = 0.01 + vmax * u01(rng);
      const double fd = oracle::derivative([&](double x) { return c.G(x, w).G; }, L, 1e-4);
      CHECK(std::abs(fd - c.G(L, w).G_v) < 1e-8);
    }

    // Symmetric tensor bounded by the scan extremes.
    const auto bounds = ellipticity_scan(c, ScanGrid{});
    for (int i = 0; i < 1000; ++i) {
      const double w = uw(rng);
      const double s = 2.0 * law.critical_speed(w) * u01(rng);
      const double ang = 6.283185307179586 * u01(rng);
      const Vec3 p{s * std::cos(ang), s * std::sin(ang), 0.0};
      const Vec3 xi{u01(rng) - 0.5, u01(rng) - 0.5, 0.0};
      const auto m = c.coeff_matrix(p, w);
      CHECK(m.a[0][1] == m.a[1][0]);
      double q = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) q += xi[a] * m.a[a][b] * xi[b];
      const double n2 = dot(xi, xi);
      CHECK(q >= bounds.lambda_min * n2 * (1 - 1e-9));
      CHECK(q <= bounds.lambda_max * n2 * (1 + 1e-9));
    }
  }
}

TEST_CASE("flux is increasing across the connection band") {
  for (double theta : {0.1, 0.025, 0.0125}) {
    const CutoffDensity c(GasLaw::gamma_law(1.0, 2.0), {0.0, 2.0}, theta);
    for (double w : {0.0, 1.0, 2.0}) {
      const LocalCutoff lc = c.local(w);
      double prev = 0.0;
      for (int i = 0; i <= 200; ++i) {
        const double v = lc.v1() + (lc.v2() - lc.v1()) * i / 200.0;
        const double f = std::sqrt(v) * lc.eval(v).value;
        CHECK(f >= prev);
        prev = f;
      }
    }
  }
}

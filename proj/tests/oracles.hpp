#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library, so a test comparing against these cannot pass by sharing
// a bug with the code under test.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// Root of an increasing or decreasing f on [a, b] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double a, double b, int iters = 200) {
  double fa = f(a);
  if (fa * f(b) > 0.0) throw std::runtime_error("oracle::bisect: no sign change");
  for (int i = 0; i < iters; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

/// Fourth-order central difference.
inline double derivative(const std::function<double(double)>& f, double x, double h) {
  return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h);
}

/// Enthalpy h(rho) = int_1^rho p'(t)/t dt of p = kappa rho^gamma by quadrature.
inline double h_gamma(double kappa, double gamma, double rho) {
  return integrate([&](double t) { return kappa * gamma * std::pow(t, gamma - 2.0); }, 1.0, rho);
}

/// Critical speed of p = kappa rho^gamma: bisection for H(rho) = psi with h
/// from quadrature, then q^2 = 2 psi - 2 h.
inline double qcr_gamma(double kappa, double gamma, double psi) {
  auto H = [&](double r) {
    return 0.5 * kappa * gamma * std::pow(r, gamma - 1.0) + h_gamma(kappa, gamma, r);
  };
  const double rho = bisect([&](double r) { return H(r) - psi; }, 1e-6, 1e3);
  return std::sqrt(2.0 * psi - 2.0 * h_gamma(kappa, gamma, rho));
}

/// Gradient of the linear interpolant of (f0, f1, f2) on a triangle, by
/// Cramer's rule on the two edge equations.
inline std::array<double, 2> p1_gradient(const std::array<double, 2>& a,
                                         const std::array<double, 2>& b,
                                         const std::array<double, 2>& c, double f0, double f1,
                                         double f2) {
  const double e1x = b[0] - a[0], e1y = b[1] - a[1];
  const double e2x = c[0] - a[0], e2y = c[1] - a[1];
  const double d1 = f1 - f0, d2 = f2 - f0;
  const double det = e1x * e2y - e1y * e2x;
  return {(d1 * e2y - d2 * e1y) / det, (e1x * d2 - e2x * d1) / det};
}

/// Gradient of q (r + 1/r) cos(theta), uniform flow past the unit cylinder.
inline std::array<double, 2> cylinder_flow_gradient(double q, double x, double y) {
  const double r2 = x * x + y * y;
  return {q * (1.0 + (y * y - x * x) / (r2 * r2)), q * (-2.0 * x * y / (r2 * r2))};
}

}  // namespace oracle

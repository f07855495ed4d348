#include "potflow/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "potflow/errors.hpp"
#include "potflow/quadrature.hpp"

namespace potflow {

LocalCutoff::LocalCutoff(const GasLaw& law, double w, double theta, double plateau)
    : law_(&law), w_(w), theta_(theta), P_(plateau) {
  if (!(theta > 0.0 && theta < 0.5)) throw DomainError("theta must lie in (0, 1/2)");
  q_cr_ = law.critical_speed(w);
  q1_ = (1.0 - 2.0 * theta) * q_cr_;
  q2_ = (1.0 - theta) * q_cr_;
  v1_ = q1_ * q1_;
  v2_ = q2_ * q2_;
  p_stag_ = law.pressure(law.h_inv(w)).p;
  const double rho1 = law.h_inv(w - 0.5 * v1_);
  const double c1_sq = law.pressure(rho1).dp;
  a_ = rho1 * q1_;
  s_ = rho1 * (1.0 - v1_ / c1_sq);
  L_ = q2_ - q1_;
  delta_ = (P_ * q2_ - a_) / L_;
  if (!(delta_ > 0.0) || !(s_ > 0.0))
    throw EllipticityError("cut-off connection is not monotone in the mass flux at psi = " +
                           std::to_string(w));
  m_ = 1.0 + 2.0 * (s_ + P_) / delta_;
  c_ = delta_ - (s_ + P_) / (m_ + 1.0);
  G1_ = physical_G(v1_);
  G2_ = G1_ + L_ * (a_ + L_ * blend_F_integral(1.0));
}

double LocalCutoff::blend_F(double t) const {
  const double mp1 = m_ + 1.0;
  const double t3 = t * t * t;
  return s_ * (1.0 - std::pow(1.0 - t, mp1)) / mp1 + P_ * std::pow(t, mp1) / mp1 +
         c_ * t3 * (10.0 + t * (-15.0 + 6.0 * t));
}

double LocalCutoff::blend_F_integral(double t) const {
  const double mp1 = m_ + 1.0, mp2 = m_ + 2.0;
  const double t4 = t * t * t * t;
  return s_ / mp1 * (t - (1.0 - std::pow(1.0 - t, mp2)) / mp2) +
         P_ * std::pow(t, mp2) / (mp1 * mp2) + c_ * t4 * (2.5 + t * (-3.0 + t));
}

double LocalCutoff::physical_G(double Lambda) const {
  if (Lambda <= 0.0) return 0.0;
  if (Lambda < 1e-3 * v1_) {
    return 0.5 * integrate_gauss([this](double v) { return law_->h_inv(w_ - 0.5 * v); }, 0.0,
                                 Lambda, 6);
  }
  // int_0^L h^{-1}(w - v/2) dv = 2 int h^{-1}(y) dy and d p = rho d h.
  return p_stag_ - law_->pressure(law_->h_inv(w_ - 0.5 * Lambda)).p;
}

CutoffBranch LocalCutoff::branch(double v) const {
  if (v <= v1_) return CutoffBranch::Physical;
  if (v < v2_) return CutoffBranch::Blend;
  return CutoffBranch::Plateau;
}

LocalCutoff::Eval LocalCutoff::eval(double v) const {
  if (v <= v1_) {
    const double rho = law_->h_inv(w_ - 0.5 * v);
    return {rho, -0.5 * rho / law_->pressure(rho).dp, CutoffBranch::Physical};
  }
  if (v < v2_) {
    const double q = std::sqrt(v);
    const double t = (q - q1_) / L_;
    const double f = a_ + L_ * blend_F(t);
    const double omt = 1.0 - t;
    const double g = s_ * std::pow(omt, m_) + P_ * std::pow(t, m_) + 30.0 * c_ * t * t * omt * omt;
    const double rho = f / q;
    return {rho, 0.5 * (g - rho) / v, CutoffBranch::Blend};
  }
  return {P_, 0.0, CutoffBranch::Plateau};
}

double LocalCutoff::G(double Lambda) const {
  if (Lambda <= v1_) return physical_G(Lambda);
  if (Lambda < v2_) {
    const double t = (std::sqrt(Lambda) - q1_) / L_;
    return G1_ + L_ * (a_ * t + L_ * blend_F_integral(t));
  }
  return G2_ + 0.5 * P_ * (Lambda - v2_);
}

CutoffDensity::CutoffDensity(GasLaw law, PsiRange force_range, double theta, double pad_fraction)
    : law_(std::make_shared<const GasLaw>(std::move(law))), theta_(theta) {
  if (!(theta > 0.0 && theta < 0.5)) throw DomainError("theta must lie in (0, 1/2)");
  if (force_range.min > force_range.max) throw DomainError("empty force range");
  const double pad = pad_fraction * (force_range.max - force_range.min);
  range_ = {force_range.min - pad, force_range.max + pad};
  law_->check_admissible(range_.min, range_.max);
  plateau_ = plateau_constant(*law_, range_, theta_);
  ellipticity_scan(*this, ScanGrid{0.0, -1.0, 256, 9});
}

void CutoffDensity::check_w(double w) const {
  const double tol = 1e-12 * (1.0 + std::abs(w));
  if (w < range_.min - tol || w > range_.max + tol)
    throw DomainError("psi = " + std::to_string(w) + " outside the cut-off force range [" +
                      std::to_string(range_.min) + ", " + std::to_string(range_.max) + "]");
}

LocalCutoff CutoffDensity::local(double w) const {
  check_w(w);
  return LocalCutoff(*law_, w, theta_, plateau_);
}

RhoTildeEval CutoffDensity::rho_tilde(double v, double w) const {
  const LocalCutoff lc = local(w);
  const auto e = lc.eval(v);
  double dw = 0.0;
  switch (e.branch) {
    case CutoffBranch::Physical:
      dw = -2.0 * e.dv;  // rho / c^2
      break;
    case CutoffBranch::Plateau:
      dw = 0.0;
      break;
    case CutoffBranch::Blend: {
      // Fourth-order central difference in w of the exact connection.
      const double hw = 1e-4 * std::max({1.0, std::abs(w), lc.critical_speed() * lc.critical_speed()});
      auto at = [&](double ww) { return LocalCutoff(*law_, ww, theta_, plateau_).eval(v).value; };
      dw = (8.0 * (at(w + hw) - at(w - hw)) - (at(w + 2 * hw) - at(w - 2 * hw))) / (12.0 * hw);
      break;
    }
  }
  return {e.value, e.dv, dw};
}

EnergyDensity CutoffDensity::G(double Lambda, double w) const {
  if (Lambda < 0.0) throw DomainError("negative speed squared");
  const auto r = rho_tilde(Lambda, w);
  return {local(w).G(Lambda), 0.5 * r.value, 0.5 * r.dw};
}

CoeffMatrix CutoffDensity::coeff_matrix(const Vec3& p, double w) const {
  const auto r = rho_tilde(dot(p, p), w);
  CoeffMatrix out{};
  const double s = 2.0 * r.dv;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      out.a[i][j] = (i == j ? r.value : 0.0) + s * (p[i] * p[j]);
      out.a[j][i] = out.a[i][j];
    }
  out.rho_w = r.dw;
  return out;
}

double plateau_constant(const GasLaw& law, PsiRange range, double theta) {
  if (!(theta > 0.0 && theta < 0.5)) throw DomainError("theta must lie in (0, 1/2)");
  const double k = (1.0 - theta) * (1.0 - theta);
  auto value = [&](double w) {
    const double q = law.critical_speed(w);
    return law.h_inv(w - 0.5 * k * q * q);
  };
  if (range.max <= range.min) return value(range.min);
  constexpr int kSamples = 1024;
  const double dx = (range.max - range.min) / (kSamples - 1);
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSamples; ++i) {
    const double v = value(range.min + i * dx);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = range.min + std::max(0, best - 1) * dx;
  double b = range.min + std::min(kSamples - 1, best + 1) * dx;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = value(x1), f2 = value(x2);
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = value(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = value(x1);
    }
  }
  return std::max({best_val, f1, f2});
}

EllipticityBounds ellipticity_scan(const CutoffDensity& cutoff, const ScanGrid& grid) {
  const PsiRange r = cutoff.range();
  const int n_w = r.max > r.min ? std::max(grid.n_w, 2) : 1;
  std::vector<LocalCutoff> locals;
  double qmax_sq = 0.0;
  for (int j = 0; j < n_w; ++j) {
    const double w = n_w == 1 ? r.min : r.min + (r.max - r.min) * j / (n_w - 1);
    locals.push_back(cutoff.local(w));
    qmax_sq = std::max(qmax_sq, locals.back().critical_speed() * locals.back().critical_speed());
  }
  const double v_max = grid.v_max > 0.0 ? grid.v_max : 4.0 * qmax_sq;
  EllipticityBounds b{std::numeric_limits<double>::infinity(), 0.0};
  auto visit = [&](const LocalCutoff& lc, double v) {
    if (v < grid.v_min || v > v_max) return;
    const auto e = lc.eval(v);
    const double along = e.value + 2.0 * v * e.dv;
    b.lambda_min = std::min({b.lambda_min, e.value, along});
    b.lambda_max = std::max({b.lambda_max, e.value, along});
  };
  const int n_v = std::max(grid.n_v, 2);
  for (const auto& lc : locals) {
    for (int i = 0; i < n_v; ++i) visit(lc, grid.v_min + (v_max - grid.v_min) * i / (n_v - 1));
    // Dense sampling inside the connection band.
    for (int i = 0; i <= 64; ++i) visit(lc, lc.v1() + (lc.v2() - lc.v1()) * i / 64.0);
  }
  if (!(b.lambda_min > 0.0))
    throw EllipticityError("cut-off coefficient tensor not uniformly elliptic: lambda_min = " +
                           std::to_string(b.lambda_min));
  return b;
}

}  // namespace potflow

#pragma once

#include <memory>

#include "potflow/force_field.hpp"
#include "potflow/gas_model.hpp"
#include "potflow/types.hpp"

namespace potflow {

enum class CutoffBranch { Physical, Blend, Plateau };

struct RhoTildeEval {
  double value;
  double dv;
  double dw;
};

struct EnergyDensity {
  double G;     // 0.5 * int_0^Lambda rho~(v, psi) dv
  double G_v;   // 0.5 * rho~(Lambda, psi)
  double G_vw;  // 0.5 * d rho~ / d psi
};

/// The cut-off density frozen at one force-potential value w. Speeds are
/// split at q1 = (1 - 2 theta) q_cr(w) and q2 = (1 - theta) q_cr(w):
///   v <= q1^2          rho~ = h^{-1}(w - v/2)             (physical)
///   q1^2 < v < q2^2    monotone C1 connection             (blend)
///   v >= q2^2          rho~ = plateau                     (plateau)
///
/// The connection is built on the mass flux f(q) = q rho~(q^2, w), whose
/// derivative f'(q) is the eigenvalue of the coefficient tensor along the
/// velocity. With t = (q - q1)/(q2 - q1),
///   f'(q) = s (1-t)^m + P t^m + c * 30 t^2 (1-t)^2,
/// where s and P are the slopes of the neighbouring branches, and m, c are
/// fixed by matching f(q2) = P q2 with c > 0. Every term is nonnegative and
/// the first two never vanish together, so f' > 0 across the band.
///
/// Holds a pointer to the gas law; the law must outlive this object.
class LocalCutoff {
 public:
  struct Eval {
    double value;
    double dv;
    CutoffBranch branch;
  };

  LocalCutoff(const GasLaw& law, double w, double theta, double plateau);

  Eval eval(double v) const;
  /// 0.5 * int_0^Lambda rho~(v, w) dv, exact on every branch.
  double G(double Lambda) const;
  CutoffBranch branch(double v) const;

  double w() const { return w_; }
  double critical_speed() const { return q_cr_; }
  double v1() const { return v1_; }
  double v2() const { return v2_; }
  double plateau() const { return P_; }

 private:
  double physical_G(double Lambda) const;
  double blend_F(double t) const;
  double blend_F_integral(double t) const;

  const GasLaw* law_;
  double w_, theta_;
  double q_cr_, q1_, q2_, v1_, v2_;
  double p_stag_;   // p(h^{-1}(w))
  double a_, s_, P_, L_, delta_, m_, c_;
  double G1_, G2_;
};

struct CoeffMatrix {
  Mat3 a;        // rho~ I + 2 rho~_v p p^T
  double rho_w;  // multiplies grad psi to form the lower-order coefficient
};

/// Cut-off density over a force-potential range (padded by 1% of its width).
/// Construction computes the plateau constant and verifies uniform
/// ellipticity on a sampling grid; a violation throws EllipticityError.
/// Immutable afterwards and safe for concurrent reads.
class CutoffDensity {
 public:
  CutoffDensity(GasLaw law, PsiRange force_range, double theta, double pad_fraction = 0.01);

  const GasLaw& law() const { return *law_; }
  double theta() const { return theta_; }
  double plateau() const { return plateau_; }
  /// Padded range on which evaluation is permitted.
  PsiRange range() const { return range_; }

  /// Throws DomainError if w is outside the padded range.
  LocalCutoff local(double w) const;
  RhoTildeEval rho_tilde(double v, double w) const;
  EnergyDensity G(double Lambda, double w) const;
  CoeffMatrix coeff_matrix(const Vec3& p, double w) const;

 private:
  void check_w(double w) const;

  std::shared_ptr<const GasLaw> law_;  // shared so LocalCutoff pointers survive moves
  double theta_;
  PsiRange range_;
  double plateau_;
};

/// sup over w in [range.min, range.max] of h^{-1}(w - (1-theta)^2 q_cr(w)^2 / 2):
/// dense sampling (1024 points) refined by golden-section search.
double plateau_constant(const GasLaw& law, PsiRange range, double theta);

struct ScanGrid {
  double v_min = 0.0;
  double v_max = -1.0;  // <= 0 selects 4 * max q_cr^2 over the range
  int n_v = 512;
  int n_w = 33;
};

struct EllipticityBounds {
  double lambda_min;
  double lambda_max;
};

/// Extreme eigenvalues of the coefficient tensor over a (v, w) grid. The
/// eigenvalues are rho~ (across the flow) and rho~ + 2 v rho~_v (along it).
/// Throws EllipticityError when lambda_min <= 0.
EllipticityBounds ellipticity_scan(const CutoffDensity& cutoff, const ScanGrid& grid);

}  // namespace potflow

#pragma once

#include <filesystem>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "potflow/interpolation.hpp"

namespace potflow {

/// p = kappa rho^gamma, gamma > 1.
struct GammaLaw {
  double kappa;
  double gamma;
};

/// p = kappa rho.
struct Isothermal {
  double kappa;
};

/// Pressure sampled at strictly increasing densities, interpolated with a
/// monotone cubic. The table must bracket rho = 1 (the reference state).
struct Tabulated {
  std::vector<std::pair<double, double>> samples;  // (rho, p)
};

struct PressureEval {
  double p;
  double dp;
  double ddp;
};

/// Pointwise Bernoulli closure: 0.5 speed_sq + h(rho) = psi.
struct BernoulliState {
  double speed_sq;
  double psi;
  double rho;
  double mach;
};

/// Interval of force potentials allowed by the closure together with the
/// distances of a requested [psi_min, psi_max] to its ends.
struct AdmissibleBand {
  double lower;  // lim_{rho->0+} H (may be -inf)
  double upper;  // lim_{rho->inf} h (may be +inf)
  double lower_margin;
  double upper_margin;
};

/// Homentropic pressure-density closure and the derived functions
///   h(rho) = int_1^rho p'(t)/t dt,   H(rho) = p'(rho)/2 + h(rho),
/// their inverses, the sound speed and the critical speed.
///
/// Immutable after construction; every member is safe for concurrent use.
class GasLaw {
 public:
  using Kind = std::variant<GammaLaw, Isothermal, Tabulated>;

  static constexpr double kDefaultRhoFloor = 1e-8;

  /// Throws LawError if the law violates p' > 0 or 2p' + rho p'' > 0
  /// (checked at 1000 sample densities).
  explicit GasLaw(Kind kind, double rho_floor = kDefaultRhoFloor);

  static GasLaw gamma_law(double kappa, double gamma,
                          double rho_floor = kDefaultRhoFloor);
  static GasLaw isothermal(double kappa, double rho_floor = kDefaultRhoFloor);
  /// Two-column "rho pressure" ASCII table with '#' comments.
  static GasLaw load_table(const std::filesystem::path& path,
                           double rho_floor = kDefaultRhoFloor);

  const Kind& kind() const { return kind_; }
  double rho_floor() const { return rho_floor_; }
  /// Largest density at which the closure is defined (+inf for analytic laws).
  double rho_max() const { return rho_max_; }

  PressureEval pressure(double rho) const;
  double h(double rho) const;
  double h_inv(double y) const;
  double H(double rho) const;
  double H_inv(double psi) const;
  double sound_speed(double rho) const;

  /// q_cr(psi) = sqrt(2 psi - 2 h(H^{-1}(psi))). The sonic state at H^{-1}(psi)
  /// is checked to have Mach 1 to 1e-8.
  double critical_speed(double psi) const;

  BernoulliState bernoulli_density(double speed_sq, double psi) const;

  /// Throws AdmissibilityError naming the violated side.
  AdmissibleBand check_admissible(double psi_min, double psi_max) const;

  /// lim_{rho->0+} H and lim_{rho->inf} h, in closed form per law or at the
  /// table ends.
  double H_lower_limit() const;
  double h_upper_limit() const;

 private:
  void check_density(double rho) const;
  void verify_law() const;
  double invert_monotone(double target, bool use_H) const;
  double tab_h(double rho) const;

  Kind kind_;
  double rho_floor_;
  double rho_max_ = std::numeric_limits<double>::infinity();
  MonotoneCubic table_;
  std::vector<double> table_h_;  // h at the table knots
};

}  // namespace potflow

#pragma once

#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "potflow/exterior_mesh.hpp"
#include "potflow/interpolation.hpp"
#include "potflow/types.hpp"

namespace potflow {

struct ConstantPotential {
  double value = 0.0;
};

struct PointSource {
  Vec3 center;
  double strength;
};

/// psi(x) = sum_k strength_k / |x - center_k|. The 3D kernel is used in 2D as
/// well so that psi stays bounded.
struct PointSources {
  std::vector<PointSource> sources;
};

/// psi(x) = G * int_{obstacle} rho_s(y) / |x - y| dy over cone-shell cells with
/// piecewise-constant density. Three-dimensional only.
struct NewtonianBody {
  ObstacleInterior body;
  std::vector<double> cell_density;
  double gravitational_constant = 1.0;
};

/// psi(x) = f(|x|) with f a monotone cubic through (r, psi) samples, held
/// constant outside the sampled radii.
struct RadialProfile {
  std::vector<std::pair<double, double>> samples;
};

/// Conservative body force F = grad psi.
class ForcePotential {
 public:
  using Kind = std::variant<ConstantPotential, PointSources, NewtonianBody, RadialProfile>;

  ForcePotential(Kind kind, int dimension);

  static ForcePotential constant(double value, int dimension);
  static ForcePotential point_sources(std::vector<PointSource> sources, int dimension);
  static ForcePotential newtonian_body(ObstacleInterior body, double uniform_density,
                                       double gravitational_constant);
  static ForcePotential radial_profile(std::vector<std::pair<double, double>> samples,
                                       int dimension);
  /// Two-column ASCII "r psi" with '#' comments.
  static ForcePotential load_radial_profile(const std::filesystem::path& path, int dimension);

  const Kind& kind() const { return kind_; }
  int dimension() const { return dim_; }
  bool is_constant() const { return std::holds_alternative<ConstantPotential>(kind_); }

  /// Throws SingularityError at a point source.
  double psi(const Vec3& x) const;
  Vec3 grad_psi(const Vec3& x) const;

 private:
  struct NewtonianEval {
    double value;
    Vec3 grad;
  };
  NewtonianEval newtonian(const NewtonianBody& nb, const Vec3& x) const;

  Kind kind_;
  int dim_;
  MonotoneCubic profile_;
};

struct PsiRange {
  double min;
  double max;
};

/// Extremes of psi over the cell barycenters (the quadrature points of the
/// P1 discretization).
PsiRange psi_range(const ForcePotential& f, const ExteriorMesh& mesh);

struct DecayReport {
  double d1psi_norm;         // || d_1 psi ||_{L^{2n/(n+2)}(Omega_R)}
  double weighted_grad_norm; // || |x|^beta grad psi ||_{L^q(Omega_R)}
  std::optional<double> fitted_exponent;  // slope of log|grad psi| vs log r
  double predicted_beta_prime;            // min{n/2, beta + n/q - 1}
  std::vector<std::pair<double, double>> annulus_maxima;  // (r, max |grad psi|)
};

/// Truncated-domain surrogates of the integrability conditions on the force
/// and a least-squares decay exponent of |grad psi| over >= 6 log-spaced
/// annuli. Purely diagnostic.
DecayReport decay_report(const ForcePotential& f, const ExteriorMesh& mesh, double q_exp,
                         double beta);

/// min{n/2, beta + n/q - 1}: decay rate of grad(phi) - q_inf e_1 at infinity.
double predicted_decay_exponent(int n, double q_exp, double beta);

}  // namespace potflow

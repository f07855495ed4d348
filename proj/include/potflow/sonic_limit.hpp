#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "potflow/bers_continuation.hpp"

namespace potflow {

/// Radial shell r_min < |x| < r_max used for norms and test functions.
struct CompactSubset {
  double r_min;
  double r_max;
};

/// (1.5 obstacle radius, 0.5 R).
CompactSubset default_subset(const ExteriorMesh& mesh);

struct LimitSequence {
  double q_hat;
  double theta;
  CompactSubset subset;
  std::vector<ContinuationRecord> members;
};

/// Warm-started solves at q_hat (1 - 2^-k), k = 1..n_steps, with the cut-off
/// parameter theta.
LimitSequence build_sequence(const EnergyModel& model, double q_hat, int n_steps,
                             const ProblemData& data);

/// Pairwise ||u_i - u_j||_{L^2(subset)}.
std::vector<std::vector<double>> cauchy_table(const EnergyModel& model, const LimitSequence& seq);

/// (1 - |x - c|^2 / r^2)^3 inside the ball, zero outside. C^2.
struct Bump {
  Vec3 center;
  double radius;
  double value(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
};

struct TestSet {
  std::vector<Index> hat_vertices;  // nodal hats supported in the subset
  std::vector<Bump> bumps;
};

TestSet make_test_set(const ExteriorMesh& mesh, CompactSubset subset, int n_bumps = 10,
                      std::uint64_t seed = 20240601);

/// Per-cell physical state: velocity, Bernoulli density, pressure.
struct PhysicalFields {
  std::vector<Vec3> u;
  std::vector<double> rho;
  std::vector<double> p;
};

PhysicalFields physical_fields(const EnergyModel& model, const FlowState& state);

/// max over chi of |int rho u . grad chi| / ||grad chi||_{L^2}. Bumps are
/// replaced by their P1 interpolants on the mesh.
double weak_residual_mass(const EnergyModel& model, const FlowState& state, const TestSet& tests);

/// max over chi e_k of |int rho u_k u . grad chi + p d_k chi + rho d_k psi chi| / ||grad chi||.
double weak_residual_momentum(const EnergyModel& model, const FlowState& state,
                              const TestSet& tests);

struct DecayFit {
  double exponent;  // positive decay rate of max |grad phi - q e_1| per annulus
  std::vector<std::pair<double, double>> annulus_maxima;  // (r at max, deviation)
};

/// Least-squares slope of log max deviation against log r over n_annuli
/// log-spaced annuli in (2 obstacle radius, 0.8 R), or (0.1 R, 0.8 R) without
/// an obstacle. Throws FitError when all
/// deviations are below 1e-12 or fewer than 5 annuli are populated.
DecayFit farfield_decay_fit(const EnergyModel& model, const FlowState& state, int n_annuli = 8);

struct MemberDiagnostics {
  double q_infinity;
  double max_mach;
  double mass_residual;
  double momentum_residual;
  double decay_exponent;  // NaN when no fit was possible
};

std::vector<MemberDiagnostics> diagnose(const EnergyModel& model, const LimitSequence& seq,
                                        const TestSet& tests);

/// CSV "member,q_infinity,max_mach,mass_residual,momentum_residual,decay_exponent".
std::string diagnostics_csv(const std::vector<MemberDiagnostics>& rows);

/// Statement printed with every limit report.
extern const char* const kLimitGapNote;

}  // namespace potflow

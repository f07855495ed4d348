#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "potflow/energy_solver.hpp"

namespace potflow {

/// Everything that stays fixed while q_inf and theta vary.
struct ProblemData {
  std::shared_ptr<const ExteriorMesh> mesh;
  ForcePotential force;
  GasLaw law;
  SolverOptions solver{};
  /// Used for a retry when the regular solve does not converge.
  SolverOptions near_sonic{1e-8, 400};
  ParallelOptions parallel{};
};

EnergyModel make_model(const ProblemData& data, double theta);

struct MachRatio {
  double value;  // max |grad phi| / q_cr(psi) over barycenters
  std::size_t cell;
  Vec3 location;
};

MachRatio max_mach_ratio(const EnergyModel& model, const FlowState& state);

struct ContinuationRecord {
  double q_infinity;
  double theta;
  double max_mach_ratio;
  Vec3 argmax;
  bool certified_subsonic;  // max_mach_ratio < 1 - 2 theta
  bool relaxed_tolerance;   // converged only under the near-sonic options
  SolveReport report;
  FlowState state;
};

/// Solves the theta-cut-off problem at q_inf, warm-started from `warm`
/// (rescaled to the new Dirichlet data) when given.
ContinuationRecord solve_certified(const EnergyModel& model, double q_infinity,
                                   const ProblemData& data, const FlowState* warm = nullptr);

struct SweepResult {
  std::vector<ContinuationRecord> records;
  std::optional<std::string> error;  // set when the sweep stopped early
};

/// Sequential warm-started solves over an increasing list of speeds.
SweepResult sweep(const std::vector<double>& q_list, double theta, const ProblemData& data);

struct Bracket {
  double lower;  // certified
  double upper;  // not certified
};

struct ThetaStage {
  double theta;
  double q_certified;     // q_inf^i, sup of certified speeds found
  bool capped;            // the bracket upper end was certified
  double tol_q;
  std::vector<Bracket> brackets;
  std::vector<ContinuationRecord> records;
};

struct CriticalOptions {
  double tol_q = 0.0;          // <= 0: 1e-3 q_cr(psi) at the last certified argmax
  double upper_factor = 1.5;   // initial upper end = factor * c(1)
  double upper_override = 0.0; // > 0 replaces factor * c(1)
  int max_bisections = 60;
};

struct CriticalResult {
  double q_hat;
  std::vector<ThetaStage> stages;
  bool nondecreasing;
  bool bracket_invariant;
};

/// Bers continuation: for each theta of a strictly decreasing schedule in
/// (0, 1/2), bisect q_inf between the last certified and the first
/// uncertified speed. The estimate is mesh- and truncation-dependent.
CriticalResult critical_qhat(const std::vector<double>& theta_schedule, const ProblemData& data,
                             const CriticalOptions& opts = {});

struct ContinuityProbe {
  double q;
  double base_ratio;
  std::vector<double> deltas;
  std::vector<double> differences;  // |M(q + delta) - M(q)|
};

ContinuityProbe continuity_probe(double q, const std::vector<double>& deltas, double theta,
                                 const ProblemData& data);

/// CSV "theta,q_infinity,max_mach_ratio,certified,iterations,energy".
std::string continuation_csv(const std::vector<ContinuationRecord>& records);

/// Default schedule 0.1 * 2^-i, i = 0..3.
std::vector<double> default_theta_schedule();

}  // namespace potflow

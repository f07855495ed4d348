#pragma once

#include <memory>
#include <string>
#include <vector>

#include "potflow/cutoff.hpp"
#include "potflow/errors.hpp"
#include "potflow/exterior_mesh.hpp"
#include "potflow/force_field.hpp"
#include "potflow/gas_model.hpp"
#include "potflow/kernels.hpp"
#include "potflow/parallel.hpp"
#include "potflow/sparse.hpp"

namespace potflow {

/// Mesh-derived data shared by every assembly: basis gradients, cell
/// volumes, psi and grad psi at barycenters, the free-vertex numbering and
/// the Hessian sparsity pattern.
class Discretization {
 public:
  Discretization(std::shared_ptr<const ExteriorMesh> mesh, const ForcePotential& force);

  const ExteriorMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const ExteriorMesh> mesh_ptr() const { return mesh_; }
  int dim() const { return mesh_->dim(); }
  std::size_t num_cells() const { return volume_.size(); }
  std::size_t num_vertices() const { return free_index_.size(); }
  std::size_t num_free() const { return free_vertices_.size(); }

  /// Free (non-OUTER) index of vertex v, or -1.
  Index free_index(std::size_t v) const { return free_index_[v]; }
  const std::vector<Index>& free_vertices() const { return free_vertices_; }

  double volume(std::size_t c) const { return volume_[c]; }
  double psi(std::size_t c) const { return psi_[c]; }
  const Vec3& grad_psi(std::size_t c) const { return grad_psi_[c]; }
  /// grad lambda_i on cell c (i < dim + 1).
  Vec3 grad_lambda(std::size_t c, int i) const;
  PsiRange psi_range() const { return range_; }

  kernels::CellGeometry geometry() const {
    return {num_cells(), vertex_.data(), grad_lambda_.data()};
  }
  const CsrMatrix& pattern() const { return pattern_; }
  /// Position of the (i, j) local pair of cell c in the CSR values, or -1.
  std::int64_t position(std::size_t c, int i, int j) const { return position_[16 * c + 4 * i + j]; }

 private:
  std::shared_ptr<const ExteriorMesh> mesh_;
  std::vector<double> volume_, psi_;
  std::vector<Vec3> grad_psi_;
  std::vector<std::int32_t> vertex_;
  std::vector<double> grad_lambda_;
  std::vector<Index> free_index_, free_vertices_;
  CsrMatrix pattern_;
  std::vector<std::int64_t> position_;
  PsiRange range_{};
};

/// Nodal potential phi (total, not perturbation) and the data it belongs to.
struct FlowState {
  double q_infinity = 0.0;
  double theta = 0.1;
  std::vector<double> phi;
};

enum class AssembleOrder { Value, Gradient, Hessian };

struct Assembly {
  double energy = 0.0;
  std::vector<double> gradient;  // over free vertices
  CsrMatrix hessian;             // empty unless requested
  int cutoff_active_cells = 0;   // cells beyond the physical branch
};

/// Per-cell derived fields of a state.
struct CellFields {
  std::vector<Vec3> velocity;
  std::vector<double> speed_sq;
  std::vector<double> rho_tilde;
  std::vector<double> mach_ratio;  // |u| / q_cr(psi)
  std::vector<bool> cutoff_active;
};

/// The discrete cut-off energy J_h(phi) = sum_cells |K| G(|grad phi|^2, psi(x_K))
/// with phi = q_inf x_1 on OUTER vertices.
class EnergyModel {
 public:
  EnergyModel(std::shared_ptr<const ExteriorMesh> mesh, ForcePotential force, GasLaw law,
              double theta, ParallelOptions parallel = {});

  const Discretization& disc() const { return *disc_; }
  const ExteriorMesh& mesh() const { return disc_->mesh(); }
  const ForcePotential& force() const { return force_; }
  const GasLaw& law() const { return cutoff_.law(); }
  const CutoffDensity& cutoff() const { return cutoff_; }
  double theta() const { return cutoff_.theta(); }
  const LocalCutoff& local(std::size_t c) const { return local_[c]; }
  const ParallelOptions& parallel() const { return parallel_; }
  void set_parallel(ParallelOptions p) { parallel_ = p; }

  /// phi = q_inf x_1 everywhere.
  FlowState uniform_state(double q_infinity) const;
  /// Overwrites OUTER values with q_inf x_1.
  void apply_dirichlet(FlowState& s) const;
  /// Throws ValidationError when the Dirichlet data is violated.
  void check_state(const FlowState& s) const;

  Assembly assemble(const FlowState& s, AssembleOrder order) const;
  /// Cell gradients (4 doubles per cell, last unused) via the active kernel.
  std::vector<double> cell_gradients(const std::vector<double>& phi) const;
  CellFields fields(const FlowState& s) const;

 private:
  std::shared_ptr<const Discretization> disc_;
  ForcePotential force_;
  CutoffDensity cutoff_;
  std::vector<LocalCutoff> local_;
  ParallelOptions parallel_;
};

struct SolverOptions {
  double tol = 1e-10;  // absolute, on the Euclidean norm of the free gradient
  int max_iter = 100;
  double cg_rel_tol = 1e-8;
  int cg_max_factor = 10;  // CG iterations capped at factor * unknowns
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
};

struct IterationRecord {
  int iteration;
  double energy;
  double gradient_norm;
  double step_length;
  int cg_iterations;
  bool roundoff_step;  // accepted on gradient decrease at roundoff-level energy change
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  double energy = 0.0;
  double flow_functional = 0.0;
  double max_speed = 0.0;
  double max_mach_ratio = 0.0;
  int cutoff_active_cells = 0;
  int cg_iterations = 0;
  double wall_time = 0.0;
  std::vector<IterationRecord> history;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, SolveReport report)
      : Error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// Damped Newton on J_h with Armijo backtracking and Jacobi-preconditioned
/// CG inner solves. Updates `state` in place.
SolveReport newton_solve(const EnergyModel& model, FlowState& state, const SolverOptions& opts = {});

/// Fills the derived fields of a report (energy, flow functional, maxima).
void summarize(const EnergyModel& model, const FlowState& state, SolveReport& report);

/// The truncated-domain functional
///   I = sum |K| [G(|g|^2) - G(q^2) - 2 G_v(q^2) q (g_1 - q)]
///       - sum |K| 2 G_vw(q^2) q d_1 psi phibar
///       + sum_{OBSTACLE faces} |F| 2 G_v(q^2) q phibar n_1,
/// with phibar = phi - q x_1 and n the outward normal of the flow region.
double flow_functional(const EnergyModel& model, const FlowState& state);

struct ResidualReport {
  double weak_norm;                  // free gradient norm
  std::vector<double> cell_indicator;  // flux-jump indicator per cell
  double total;                      // sqrt of the sum of squared indicators
};

ResidualReport el_residual(const EnergyModel& model, const FlowState& state);

struct BoundaryFlux {
  double obstacle;
  double outer;
};

/// Net mass flux sum |F| rho~ grad phi . n over each boundary tag.
BoundaryFlux mass_flux_check(const EnergyModel& model, const FlowState& state);

/// ||grad a - grad b||_{L^2} over the whole mesh.
double gradient_l2_distance(const EnergyModel& model, const std::vector<double>& a,
                            const std::vector<double>& b);

/// CSV lines "iteration,energy,gradient_norm,step_length".
std::string history_csv(const SolveReport& report);

}  // namespace potflow

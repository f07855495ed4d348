#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "potflow/bers_continuation.hpp"

namespace potflow {

struct GasSpec {
  std::string kind = "gamma";  // gamma | isothermal | table
  double kappa = 1.0;
  double gamma = 2.0;
  std::string path;
  double rho_floor = GasLaw::kDefaultRhoFloor;
  bool operator==(const GasSpec&) const = default;
};

struct SourceSpec {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double strength = 1.0;
  bool operator==(const SourceSpec&) const = default;
};

struct ForceSpec {
  std::string kind = "constant";  // constant | point_sources | newtonian | radial_profile
  double value = 0.0;
  std::vector<SourceSpec> sources;
  double density = 0.0;
  double gravitational_constant = 1.0;
  std::vector<std::array<double, 2>> samples;
  std::string path;
  bool operator==(const ForceSpec&) const = default;
};

struct MeshSpec {
  std::string kind = "annulus";  // annulus | shell | file
  double inner_radius = 1.0;
  double outer_radius = 20.0;
  int n_radial = 24;
  int n_angular = 48;
  int refinement_level = 2;
  double grading = 1.15;
  std::string path;
  bool operator==(const MeshSpec&) const = default;
};

struct CutoffSpec {
  double theta = 0.1;
  std::vector<double> schedule{0.1, 0.05, 0.025, 0.0125};
  bool operator==(const CutoffSpec&) const = default;
};

struct SolverSpec {
  double tol = 1e-10;
  int max_iter = 100;
  double cg_rel_tol = 1e-8;
  double near_sonic_tol = 1e-8;
  int near_sonic_max_iter = 400;
  bool operator==(const SolverSpec&) const = default;
};

struct ContinuationSpec {
  std::vector<double> q_list{0.1, 0.2, 0.3, 0.4, 0.5};
  double tol_q = 0.0;
  double upper_factor = 1.5;
  double upper_override = 0.0;
  int limit_steps = 4;
  double q_hat = 0.0;  // limit: <= 0 runs the critical search first
  bool operator==(const ContinuationSpec&) const = default;
};

struct DecaySpec {
  double q_exp = 4.0;
  double beta = 1.0;
  bool operator==(const DecaySpec&) const = default;
};

struct OutputSpec {
  std::string directory = "potflow_out";
  std::string format = "vtk";  // vtk | csv | both
  bool operator==(const OutputSpec&) const = default;
};

struct ParallelSpec {
  bool deterministic = true;
  int threads = 0;
  bool operator==(const ParallelSpec&) const = default;
};

struct RunConfig {
  GasSpec gas;
  ForceSpec force;
  MeshSpec mesh;
  CutoffSpec cutoff;
  SolverSpec solver;
  double q_infinity = 0.0;
  ContinuationSpec continuation;
  DecaySpec decay;
  OutputSpec output;
  ParallelSpec parallel;
  std::optional<std::array<double, 2>> check_psi_range;
  bool operator==(const RunConfig&) const = default;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the
/// offending key. Relative paths are resolved against `base_dir`.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

/// Parameter ranges and file existence. Throws ConfigError.
void validate(const RunConfig& c);

GasLaw build_gas(const RunConfig& c);
std::shared_ptr<const ExteriorMesh> build_mesh(const RunConfig& c);
ForcePotential build_force(const RunConfig& c, const ExteriorMesh& mesh);

/// Builds mesh, force, and gas and checks that psi over the mesh is
/// admissible. Throws ConfigError.
ProblemData build_problem(const RunConfig& c);

}  // namespace potflow

#include "potflow/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "potflow/errors.hpp"

namespace potflow {
namespace {

using nlohmann::json;

// Reads one JSON object, rejecting keys that are never consumed.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(name("") + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key) + ": wrong type");
    }
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), name(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(name(it.key()) + ": unknown key");
  }

  std::string name(const std::string& key) const {
    if (prefix_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.string();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  Section top(j, "");

  if (top.has("gas")) {
    Section s = top.sub("gas");
    s.get("kind", c.gas.kind);
    s.get("kappa", c.gas.kappa);
    s.get("gamma", c.gas.gamma);
    s.get("path", c.gas.path);
    s.get("rho_floor", c.gas.rho_floor);
    s.finish();
    c.gas.path = resolve(c.gas.path, base_dir);
  }
  if (top.has("force")) {
    Section s = top.sub("force");
    s.get("kind", c.force.kind);
    s.get("value", c.force.value);
    if (s.has("sources")) {
      const json& arr = s.raw("sources");
      if (!arr.is_array()) throw ConfigError("force.sources: expected an array");
      c.force.sources.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section src(arr[i], "force.sources[" + std::to_string(i) + "]");
        SourceSpec sp;
        src.get("center", sp.center);
        src.get("strength", sp.strength);
        src.finish();
        c.force.sources.push_back(sp);
      }
    }
    s.get("density", c.force.density);
    s.get("gravitational_constant", c.force.gravitational_constant);
    s.get("samples", c.force.samples);
    s.get("path", c.force.path);
    s.finish();
    c.force.path = resolve(c.force.path, base_dir);
  }
  if (top.has("mesh")) {
    Section s = top.sub("mesh");
    s.get("kind", c.mesh.kind);
    s.get("inner_radius", c.mesh.inner_radius);
    s.get("outer_radius", c.mesh.outer_radius);
    s.get("n_radial", c.mesh.n_radial);
    s.get("n_angular", c.mesh.n_angular);
    s.get("refinement_level", c.mesh.refinement_level);
    s.get("grading", c.mesh.grading);
    s.get("path", c.mesh.path);
    s.finish();
    c.mesh.path = resolve(c.mesh.path, base_dir);
  }
  if (top.has("cutoff")) {
    Section s = top.sub("cutoff");
    s.get("theta", c.cutoff.theta);
    s.get("schedule", c.cutoff.schedule);
    s.finish();
  }
  if (top.has("solver")) {
    Section s = top.sub("solver");
    s.get("tol", c.solver.tol);
    s.get("max_iter", c.solver.max_iter);
    s.get("cg_rel_tol", c.solver.cg_rel_tol);
    s.get("near_sonic_tol", c.solver.near_sonic_tol);
    s.get("near_sonic_max_iter", c.solver.near_sonic_max_iter);
    s.finish();
  }
  top.get("q_infinity", c.q_infinity);
  if (top.has("continuation")) {
    Section s = top.sub("continuation");
    s.get("q_list", c.continuation.q_list);
    s.get("tol_q", c.continuation.tol_q);
    s.get("upper_factor", c.continuation.upper_factor);
    s.get("upper_override", c.continuation.upper_override);
    s.get("limit_steps", c.continuation.limit_steps);
    s.get("q_hat", c.continuation.q_hat);
    s.finish();
  }
  if (top.has("decay")) {
    Section s = top.sub("decay");
    s.get("q_exp", c.decay.q_exp);
    s.get("beta", c.decay.beta);
    s.finish();
  }
  if (top.has("output")) {
    Section s = top.sub("output");
    s.get("directory", c.output.directory);
    s.get("format", c.output.format);
    s.finish();
  }
  if (top.has("parallel")) {
    Section s = top.sub("parallel");
    s.get("deterministic", c.parallel.deterministic);
    s.get("threads", c.parallel.threads);
    s.finish();
  }
  if (top.has("check_gas")) {
    Section s = top.sub("check_gas");
    std::array<double, 2> r{};
    if (s.has("psi_range")) {
      s.get("psi_range", r);
      c.check_psi_range = r;
    }
    s.finish();
  }
  top.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json j;
  j["gas"] = {{"kind", c.gas.kind},
              {"kappa", c.gas.kappa},
              {"gamma", c.gas.gamma},
              {"path", c.gas.path},
              {"rho_floor", c.gas.rho_floor}};
  json sources = json::array();
  for (const auto& s : c.force.sources)
    sources.push_back({{"center", s.center}, {"strength", s.strength}});
  j["force"] = {{"kind", c.force.kind},
                {"value", c.force.value},
                {"sources", sources},
                {"density", c.force.density},
                {"gravitational_constant", c.force.gravitational_constant},
                {"samples", c.force.samples},
                {"path", c.force.path}};
  j["mesh"] = {{"kind", c.mesh.kind},
               {"inner_radius", c.mesh.inner_radius},
               {"outer_radius", c.mesh.outer_radius},
               {"n_radial", c.mesh.n_radial},
               {"n_angular", c.mesh.n_angular},
               {"refinement_level", c.mesh.refinement_level},
               {"grading", c.mesh.grading},
               {"path", c.mesh.path}};
  j["cutoff"] = {{"theta", c.cutoff.theta}, {"schedule", c.cutoff.schedule}};
  j["solver"] = {{"tol", c.solver.tol},
                 {"max_iter", c.solver.max_iter},
                 {"cg_rel_tol", c.solver.cg_rel_tol},
                 {"near_sonic_tol", c.solver.near_sonic_tol},
                 {"near_sonic_max_iter", c.solver.near_sonic_max_iter}};
  j["q_infinity"] = c.q_infinity;
  j["continuation"] = {{"q_list", c.continuation.q_list},
                       {"tol_q", c.continuation.tol_q},
                       {"upper_factor", c.continuation.upper_factor},
                       {"upper_override", c.continuation.upper_override},
                       {"limit_steps", c.continuation.limit_steps},
                       {"q_hat", c.continuation.q_hat}};
  j["decay"] = {{"q_exp", c.decay.q_exp}, {"beta", c.decay.beta}};
  j["output"] = {{"directory", c.output.directory}, {"format", c.output.format}};
  j["parallel"] = {{"deterministic", c.parallel.deterministic},
                   {"threads", c.parallel.threads}};
  if (c.check_psi_range) j["check_gas"] = {{"psi_range", *c.check_psi_range}};
  return j;
}

void validate(const RunConfig& c) {
  const auto& g = c.gas;
  if (g.kind == "gamma") {
    require(std::isfinite(g.kappa) && g.kappa > 0, "gas.kappa must be positive");
    require(std::isfinite(g.gamma) && g.gamma > 1, "gas.gamma must exceed 1");
  } else if (g.kind == "isothermal") {
    require(std::isfinite(g.kappa) && g.kappa > 0, "gas.kappa must be positive");
  } else if (g.kind == "table") {
    require(!g.path.empty() && std::filesystem::exists(g.path),
            "gas.path: file not found '" + g.path + "'");
  } else {
    throw ConfigError("gas.kind: unknown law '" + g.kind + "'");
  }
  require(g.rho_floor > 0, "gas.rho_floor must be positive");

  const auto& m = c.mesh;
  if (m.kind == "annulus" || m.kind == "shell") {
    require(finite_all({m.inner_radius, m.outer_radius}) && m.inner_radius > 0,
            "mesh.inner_radius must be positive");
    require(m.inner_radius < m.outer_radius,
            "mesh.inner_radius must be smaller than mesh.outer_radius");
    require(m.n_radial >= 1, "mesh.n_radial must be at least 1");
    require(m.grading > 0, "mesh.grading must be positive");
    if (m.kind == "annulus") require(m.n_angular >= 3, "mesh.n_angular must be at least 3");
    if (m.kind == "shell")
      require(m.refinement_level >= 0 && m.refinement_level <= 6,
              "mesh.refinement_level must lie in [0, 6]");
  } else if (m.kind == "file") {
    require(!m.path.empty() && std::filesystem::exists(m.path),
            "mesh.path: file not found '" + m.path + "'");
  } else {
    throw ConfigError("mesh.kind: unknown mesh '" + m.kind + "'");
  }

  const auto& f = c.force;
  if (f.kind == "constant") {
    require(std::isfinite(f.value), "force.value must be finite");
  } else if (f.kind == "point_sources") {
    require(!f.sources.empty(), "force.sources must not be empty");
  } else if (f.kind == "newtonian") {
    require(m.kind == "shell", "force.kind: newtonian requires mesh.kind = shell");
    require(f.density >= 0, "force.density must be nonnegative");
  } else if (f.kind == "radial_profile") {
    if (!f.path.empty())
      require(std::filesystem::exists(f.path), "force.path: file not found '" + f.path + "'");
    else
      require(f.samples.size() >= 2, "force.samples needs at least two (r, psi) pairs");
  } else {
    throw ConfigError("force.kind: unknown force '" + f.kind + "'");
  }

  require(c.cutoff.theta > 0 && c.cutoff.theta < 0.5, "cutoff.theta must lie in (0, 1/2)");
  for (double t : c.cutoff.schedule)
    require(t > 0 && t < 0.5, "cutoff.schedule entries must lie in (0, 1/2)");
  for (std::size_t i = 1; i < c.cutoff.schedule.size(); ++i)
    require(c.cutoff.schedule[i] < c.cutoff.schedule[i - 1],
            "cutoff.schedule must be strictly decreasing");

  require(c.solver.tol > 0, "solver.tol must be positive");
  require(c.solver.max_iter > 0, "solver.max_iter must be positive");
  require(c.solver.cg_rel_tol > 0 && c.solver.cg_rel_tol < 1,
          "solver.cg_rel_tol must lie in (0, 1)");
  require(c.solver.near_sonic_tol > 0, "solver.near_sonic_tol must be positive");
  require(c.solver.near_sonic_max_iter > 0, "solver.near_sonic_max_iter must be positive");

  require(std::isfinite(c.q_infinity) && c.q_infinity >= 0, "q_infinity must be nonnegative");
  for (std::size_t i = 1; i < c.continuation.q_list.size(); ++i)
    require(c.continuation.q_list[i] > c.continuation.q_list[i - 1],
            "continuation.q_list must be strictly increasing");
  for (double q : c.continuation.q_list)
    require(q >= 0, "continuation.q_list entries must be nonnegative");
  require(c.continuation.tol_q >= 0, "continuation.tol_q must be nonnegative");
  require(c.continuation.upper_factor > 1, "continuation.upper_factor must exceed 1");
  require(c.continuation.limit_steps >= 3, "continuation.limit_steps must be at least 3");

  require(c.decay.q_exp >= 1, "decay.q_exp must be at least 1");
  require(c.output.format == "vtk" || c.output.format == "csv" || c.output.format == "both",
          "output.format must be vtk, csv, or both");
  require(!c.output.directory.empty(), "output.directory must not be empty");
  require(c.parallel.threads >= 0, "parallel.threads must be nonnegative");
  if (c.check_psi_range)
    require((*c.check_psi_range)[0] <= (*c.check_psi_range)[1],
            "check_gas.psi_range must be ordered");
}

GasLaw build_gas(const RunConfig& c) {
  try {
    if (c.gas.kind == "gamma") return GasLaw::gamma_law(c.gas.kappa, c.gas.gamma, c.gas.rho_floor);
    if (c.gas.kind == "isothermal") return GasLaw::isothermal(c.gas.kappa, c.gas.rho_floor);
    return GasLaw::load_table(c.gas.path, c.gas.rho_floor);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("gas: ") + e.what());
  }
}

std::shared_ptr<const ExteriorMesh> build_mesh(const RunConfig& c) {
  const auto& m = c.mesh;
  try {
    if (m.kind == "annulus")
      return std::make_shared<const ExteriorMesh>(generate_annulus_2d(
          m.inner_radius, m.outer_radius, m.n_radial, m.n_angular, m.grading));
    if (m.kind == "shell")
      return std::make_shared<const ExteriorMesh>(generate_shell_3d(
          m.inner_radius, m.outer_radius, m.refinement_level, m.n_radial, m.grading));
    return std::make_shared<const ExteriorMesh>(load_mesh(m.path));
  } catch (const Error& e) {
    throw ConfigError(std::string("mesh: ") + e.what());
  }
}

ForcePotential build_force(const RunConfig& c, const ExteriorMesh& mesh) {
  const auto& f = c.force;
  const int dim = mesh.dim();
  try {
    if (f.kind == "constant") return ForcePotential::constant(f.value, dim);
    if (f.kind == "point_sources") {
      std::vector<PointSource> src;
      for (const auto& s : f.sources) src.push_back({s.center, s.strength});
      return ForcePotential::point_sources(std::move(src), dim);
    }
    if (f.kind == "newtonian") {
      if (!mesh.obstacle_interior)
        throw ConfigError("force.kind: newtonian requires a mesh with obstacle interior");
      return ForcePotential::newtonian_body(*mesh.obstacle_interior, f.density,
                                            f.gravitational_constant);
    }
    if (!f.path.empty()) return ForcePotential::load_radial_profile(f.path, dim);
    std::vector<std::pair<double, double>> s;
    for (const auto& p : f.samples) s.emplace_back(p[0], p[1]);
    return ForcePotential::radial_profile(std::move(s), dim);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("force: ") + e.what());
  }
}

ProblemData build_problem(const RunConfig& c) {
  validate(c);
  auto mesh = build_mesh(c);
  auto force = build_force(c, *mesh);
  auto law = build_gas(c);
  PsiRange r;
  try {
    r = psi_range(force, *mesh);
  } catch (const Error& e) {
    throw ConfigError(std::string("force: ") + e.what());
  }
  try {
    law.check_admissible(r.min, r.max);
  } catch (const AdmissibilityError& e) {
    std::ostringstream os;
    os.precision(17);
    os << "force: psi range [" << r.min << ", " << r.max << "] is not admissible ("
       << (e.side() == AdmissibilityError::Side::Lower ? "below the lower" : "above the upper")
       << " end of the gas band): " << e.what();
    throw ConfigError(os.str());
  }
  ProblemData d{mesh, std::move(force), std::move(law)};
  d.solver.tol = c.solver.tol;
  d.solver.max_iter = c.solver.max_iter;
  d.solver.cg_rel_tol = c.solver.cg_rel_tol;
  d.near_sonic = d.solver;
  d.near_sonic.tol = c.solver.near_sonic_tol;
  d.near_sonic.max_iter = c.solver.near_sonic_max_iter;
  d.parallel.threads = c.parallel.threads;
  d.parallel.deterministic = c.parallel.deterministic;
  return d;
}

}  // namespace potflow

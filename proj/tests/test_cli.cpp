#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "potflow/cli.hpp"
#include "potflow/config.hpp"
#include "potflow/field_export.hpp"
#include "potflow/gas_model.hpp"

using namespace potflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("potflow_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json base_config() {
  return json::parse(R"({
    "gas": {"kind": "gamma", "kappa": 1.0, "gamma": 2.0},
    "force": {"kind": "point_sources", "sources": [{"center": [0, 0, 0], "strength": 0.5}]},
    "mesh": {"kind": "annulus", "inner_radius": 1.0, "outer_radius": 10.0,
             "n_radial": 8, "n_angular": 16, "grading": 1.3},
    "cutoff": {"theta": 0.1},
    "q_infinity": 0.3,
    "output": {"format": "both"}
  })");
}

fs::path write_config(const fs::path& dir, json j) {
  j["output"]["directory"] = (dir / "out").string();
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string config_error(const json& j) {
  try {
    build_problem(parse_config(j));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config round trip") {
  json j = base_config();
  j["continuation"] = {{"q_list", {0.1, 0.25, 1.0 / 3.0}}, {"q_hat", 0.123456789012345678}};
  j["check_gas"] = {{"psi_range", {0.0, 2.0}}};
  const RunConfig a = parse_config(j);
  CHECK(a.q_infinity == 0.3);
  CHECK(a.force.sources.size() == 1);
  CHECK(a.continuation.q_list[2] == 1.0 / 3.0);
  const json dumped = to_json(a);
  const RunConfig b = parse_config(json::parse(dumped.dump()));
  CHECK(a == b);
  CHECK(to_json(b).dump() == dumped.dump());
  // Defaults survive a round trip too.
  const RunConfig d;
  CHECK(parse_config(to_json(d)) == d);
}

TEST_CASE("config validation messages") {
  std::set<std::string> messages;
  auto expect = [&](json j, const std::string& key) {
    const std::string msg = config_error(j);
    INFO(msg);
    CHECK(msg.find(key) != std::string::npos);
    messages.insert(msg);
  };
  json j = base_config();
  j["cutoff"]["theta"] = 0.5;
  expect(j, "cutoff.theta");
  j["cutoff"]["theta"] = 0.0;
  expect(j, "cutoff.theta");
  j = base_config();
  j["gas"]["gamma"] = 1.0;
  expect(j, "gas.gamma");
  j = base_config();
  j["mesh"]["inner_radius"] = 10.0;
  expect(j, "mesh.inner_radius");
  j = base_config();
  // The gamma law with kappa = 1, gamma = 2 has lower band end -2.
  j["force"] = {{"kind", "constant"}, {"value", -3.0}};
  expect(j, "force: psi range");
  j = base_config();
  j["solver"] = {{"tolerance", 1e-9}};
  expect(j, "solver.tolerance");
  j = base_config();
  j["mesh"]["n_radial"] = "eight";
  expect(j, "mesh.n_radial");
  j = base_config();
  j["mesh"] = {{"kind", "file"}, {"path", "/nonexistent/mesh.txt"}};
  expect(j, "mesh.path");
  // theta (twice), gamma, radii, psi, unknown key, type, missing file.
  CHECK(messages.size() == 7);
  CHECK(config_error(base_config()).empty());
}

TEST_CASE("check-gas report") {
  const fs::path dir = scratch("check_gas");
  json j = base_config();
  j["check_gas"] = {{"psi_range", {0.0, 2.0}}};
  std::ostringstream out, err;
  REQUIRE(cli::run("check-gas", write_config(dir, j), out, err) == 0);
  const std::string s = out.str();
  CHECK(s.find("band: (-2, inf)") != std::string::npos);
  CHECK(s.find("q_cr(0) = 1.15470053837925") != std::string::npos);
  CHECK(s.find("q_cr(2) = 1.63299316185545") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "check_gas.txt"));
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  const fs::path cfg = write_config(dir, base_config());
  std::ostringstream out, err;
  std::string a0 = "potflow", a1 = "frobnicate", a2 = cfg.string();
  char* argv[] = {a0.data(), a1.data(), a2.data()};
  CHECK(cli::main(3, argv, out, err) == 2);
  CHECK(err.str().find("Usage") != std::string::npos);
  CHECK(err.str().find("check-gas") != std::string::npos);

  CHECK(cli::run("frobnicate", cfg, out, err) == 2);
  CHECK(cli::run("solve", dir / "missing.json", out, err) == 2);

  json bad = base_config();
  bad["gas"]["gamma"] = 0.5;
  CHECK(cli::run("solve", write_config(dir, bad), out, err) == 2);

  // A failing pipeline (here, a Newton iteration cap) is a numerical failure.
  json capped = base_config();
  capped["solver"] = {{"max_iter", 1}, {"tol", 1e-15}, {"near_sonic_max_iter", 1},
                      {"near_sonic_tol", 1e-15}};
  std::ostringstream err2;
  CHECK(cli::run("solve", write_config(dir, capped), out, err2) == 1);
  CHECK_FALSE(err2.str().empty());
}

TEST_CASE("solve at rest exports a zero-velocity field") {
  const fs::path dir = scratch("rest");
  json j = base_config();
  j["q_infinity"] = 0.0;
  std::ostringstream out, err;
  REQUIRE(cli::run("solve", write_config(dir, j), out, err) == 0);
  const auto rows = read_csv(dir / "out" / "fields.csv");
  REQUIRE(rows.size() == 257);
  for (std::size_t r = 1; r < rows.size(); ++r)
    for (int k = 4; k <= 6; ++k) CHECK(std::stod(rows[r][k]) == 0.0);
  CHECK(fs::exists(dir / "out" / "history.csv"));
  CHECK(json::parse(slurp(dir / "out" / "report.json"))["converged"] == true);
}

TEST_CASE("field files") {
  const fs::path dir = scratch("fields");
  std::ostringstream out, err;
  REQUIRE(cli::run("export", write_config(dir, base_config()), out, err) == 0);

  const auto rows = read_csv(dir / "out" / "fields.csv");
  REQUIRE(rows.size() == 257);
  CHECK(rows[0][7] == "density");
  CHECK(rows[0][8] == "mach");
  const GasLaw law = GasLaw::gamma_law(1.0, 2.0);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double ux = std::stod(rows[r][4]), uy = std::stod(rows[r][5]), uz = std::stod(rows[r][6]);
    const double rho = std::stod(rows[r][7]);
    // c^2 = p'(rho) = 2 rho for kappa = 1, gamma = 2.
    const double mach = std::sqrt(ux * ux + uy * uy + uz * uz) / std::sqrt(2.0 * rho);
    CHECK(std::abs(std::stod(rows[r][8]) - mach) <= 1e-12 * std::max(1.0, mach));
    CHECK(law.sound_speed(rho) == doctest::Approx(std::sqrt(2.0 * rho)).epsilon(1e-14));
  }

  // Legacy VTK structure.
  std::ifstream vtk(dir / "out" / "fields.vtk");
  std::string line;
  std::getline(vtk, line);
  CHECK(line == "# vtk DataFile Version 3.0");
  std::getline(vtk, line);
  std::getline(vtk, line);
  CHECK(line == "ASCII");
  std::getline(vtk, line);
  CHECK(line == "DATASET UNSTRUCTURED_GRID");
  std::map<std::string, std::string> sections;
  std::size_t points = 0, cells = 0, types = 0;
  while (std::getline(vtk, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "POINTS") ls >> points;
    if (key == "CELLS") ls >> cells;
    if (key == "CELL_TYPES") ls >> types;
    if (key == "SCALARS" || key == "VECTORS") {
      std::string name;
      ls >> name;
      sections[name] = key;
    }
  }
  CHECK(points == 9 * 16);
  CHECK(cells == 256);
  CHECK(types == 256);
  for (const char* name : {"phi", "psi", "density", "mach", "cutoff_active"})
    CHECK(sections[name] == "SCALARS");
  CHECK(sections["velocity"] == "VECTORS");
}

TEST_CASE("deterministic runs write identical CSV") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  json j = base_config();
  j["parallel"] = {{"deterministic", true}, {"threads", 3}};
  j["continuation"] = {{"q_list", {0.1, 0.2, 0.3}}};
  std::ostringstream out, err;
  for (const auto& dir : {a, b}) {
    const fs::path cfg = write_config(dir, j);
    REQUIRE(cli::run("solve", cfg, out, err) == 0);
    REQUIRE(cli::run("sweep", cfg, out, err) == 0);
  }
  for (const char* f : {"fields.csv", "history.csv", "sweep.csv"})
    CHECK(slurp(a / "out" / f) == slurp(b / "out" / f));
}

TEST_CASE("deterministic output does not depend on the thread count") {
  const fs::path a = scratch("threads_a"), b = scratch("threads_b");
  json j = base_config();
  std::ostringstream out, err;
  j["parallel"] = {{"deterministic", true}, {"threads", 1}};
  REQUIRE(cli::run("solve", write_config(a, j), out, err) == 0);
  j["parallel"]["threads"] = 4;
  REQUIRE(cli::run("solve", write_config(b, j), out, err) == 0);
  CHECK(slurp(a / "out" / "fields.csv") == slurp(b / "out" / "fields.csv"));
  CHECK(slurp(a / "out" / "history.csv") == slurp(b / "out" / "history.csv"));
}

TEST_CASE("limit subcommand") {
  const fs::path dir = scratch("limit");
  json j = base_config();
  j["cutoff"]["schedule"] = {0.1, 0.05};
  j["continuation"] = {{"q_hat", 0.5}, {"limit_steps", 3}};
  j["decay"] = {{"q_exp", 4.0}, {"beta", 1.0}};
  std::ostringstream out, err;
  REQUIRE(cli::run("limit", write_config(dir, j), out, err) == 0);
  CHECK(read_csv(dir / "out" / "cauchy.csv").size() == 1 + 9);
  CHECK(read_csv(dir / "out" / "limit_diagnostics.csv").size() == 1 + 3);
  // 2D: min{1, beta + 2/q - 1} = 0.5.
  CHECK(slurp(dir / "out" / "force_decay.txt").find("predicted_beta_prime 0.5\n") !=
        std::string::npos);
}

TEST_CASE("verify subcommand") {
  const fs::path dir = scratch("verify");
  std::ostringstream out, err;
  CHECK(cli::run("verify", write_config(dir, base_config()), out, err) == 0);
  CHECK(out.str().find("FAIL") == std::string::npos);
  CHECK(out.str().find("PASS hessian symmetry") != std::string::npos);
}

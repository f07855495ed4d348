#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "potflow/sonic_limit.hpp"

using namespace potflow;
using doctest::Approx;

namespace {

std::shared_ptr<const ExteriorMesh> annulus(int nr, int na, double grading) {
  return std::make_shared<const ExteriorMesh>(generate_annulus_2d(1.0, 20.0, nr, na, grading));
}

ProblemData source_problem(std::shared_ptr<const ExteriorMesh> mesh) {
  return {std::move(mesh), ForcePotential::point_sources({{{0.0, 0.0, 0.0}, 0.5}}, 2),
          GasLaw::gamma_law(1.0, 2.0)};
}

}  // namespace

TEST_CASE("sequence schedule and member properties") {
  const auto d = source_problem(annulus(16, 32, 1.2));
  const auto m = make_model(d, 0.05);
  const double q_hat = 0.5;
  const auto seq = build_sequence(m, q_hat, 3, d);
  REQUIRE(seq.members.size() == 3);
  CHECK(seq.members[0].q_infinity == Approx(q_hat / 2).epsilon(1e-15));
  CHECK(seq.members[1].q_infinity == Approx(3 * q_hat / 4).epsilon(1e-15));
  CHECK(seq.members[2].q_infinity == Approx(7 * q_hat / 8).epsilon(1e-15));
  CHECK(seq.subset.r_min == Approx(1.5));
  CHECK(seq.subset.r_max == Approx(10.0));
  for (std::size_t i = 1; i < 3; ++i)
    CHECK(seq.members[i].max_mach_ratio > seq.members[i - 1].max_mach_ratio);

  for (const auto& mem : seq.members) {
    REQUIRE(mem.certified_subsonic);
    CHECK(mem.max_mach_ratio <= 1 - 2 * 0.05 + 1e-12);
    const auto pf = physical_fields(m, mem.state);
    const auto cf = m.fields(mem.state);
    double bern = 0;
    for (std::size_t c = 0; c < pf.rho.size(); ++c) {
      const double w = m.disc().psi(c);
      bern = std::max(bern, std::abs(0.5 * cf.speed_sq[c] + d.law.h(pf.rho[c]) - w));
      // No cavitation: subsonic members stay above the sonic density.
      CHECK(pf.rho[c] >= d.law.H_inv(w));
      CHECK(pf.p[c] == Approx(d.law.pressure(pf.rho[c]).p).epsilon(1e-15));
    }
    CHECK(bern < 1e-10);
  }
  CHECK_THROWS_AS(build_sequence(m, q_hat, 2, d), ValidationError);
  CHECK_THROWS_AS(build_sequence(m, 0.0, 3, d), ValidationError);
}

TEST_CASE("cauchy table") {
  const auto d = source_problem(annulus(16, 32, 1.2));
  const auto m = make_model(d, 0.05);
  auto seq = build_sequence(m, 0.5, 3, d);
  seq.members.push_back(seq.members.back());
  const auto t = cauchy_table(m, seq);
  REQUIRE(t.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t[i][i] == 0.0);
    for (std::size_t j = 0; j < 4; ++j) CHECK(t[i][j] == t[j][i]);
  }
  CHECK(t[2][3] == 0.0);
  CHECK(t[0][3] > t[1][3]);
  CHECK(t[1][3] > t[2][3]);
}

TEST_CASE("test set") {
  const auto mesh = annulus(16, 32, 1.2);
  const CompactSubset sub = default_subset(*mesh);
  const auto a = make_test_set(*mesh, sub);
  const auto b = make_test_set(*mesh, sub);
  CHECK(a.bumps.size() == 10);
  CHECK(a.hat_vertices == b.hat_vertices);
  for (std::size_t i = 0; i < a.bumps.size(); ++i) CHECK(a.bumps[i].center == b.bumps[i].center);
  CHECK_FALSE(a.hat_vertices.empty());
  for (const auto& bump : a.bumps) {
    const double r = norm(bump.center);
    CHECK(r - bump.radius >= sub.r_min - 1e-12);
    CHECK(r + bump.radius <= sub.r_max + 1e-12);
    CHECK(bump.value(bump.center) == 1.0);
    // Gradient against central differences.
    const Vec3 x = bump.center + Vec3{0.3 * bump.radius, -0.2 * bump.radius, 0.0};
    const double h = 1e-6;
    const double fx = (bump.value(x + Vec3{h, 0, 0}) - bump.value(x - Vec3{h, 0, 0})) / (2 * h);
    const double fy = (bump.value(x + Vec3{0, h, 0}) - bump.value(x - Vec3{0, h, 0})) / (2 * h);
    CHECK(bump.gradient(x)[0] == Approx(fx).epsilon(1e-7));
    CHECK(bump.gradient(x)[1] == Approx(fy).epsilon(1e-7));
  }
}

TEST_CASE("mass residual over hats reproduces the assembled gradient") {
  const auto mesh = annulus(16, 32, 1.2);
  const auto d = source_problem(mesh);
  const auto m = make_model(d, 0.1);
  auto rec = solve_certified(m, 0.3, d);
  REQUIRE(rec.certified_subsonic);
  // Perturb slightly so the gradient does not vanish, staying on the
  // physical branch where the Bernoulli and cut-off densities agree.
  FlowState s = rec.state;
  for (Index v : m.disc().free_vertices()) s.phi[v] += 1e-3 * std::sin(3.0 * v);
  REQUIRE(m.assemble(s, AssembleOrder::Value).cutoff_active_cells == 0);
  TestSet hats = make_test_set(*mesh, default_subset(*mesh), 0);
  REQUIRE(hats.bumps.empty());
  const auto a = m.assemble(s, AssembleOrder::Gradient);
  double expected = 0;
  for (Index v : hats.hat_vertices) {
    // ||grad lambda_v||_{L^2} over the cells containing v.
    double n2 = 0;
    for (std::size_t c = 0; c < mesh->num_cells(); ++c)
      for (int i = 0; i < 3; ++i)
        if (mesh->cells()[c][i] == v) {
          const Vec3 g = m.disc().grad_lambda(c, i);
          n2 += m.disc().volume(c) * dot(g, g);
        }
    expected = std::max(expected, std::abs(a.gradient[m.disc().free_index(v)]) / std::sqrt(n2));
  }
  CHECK(weak_residual_mass(m, s, hats) == Approx(expected).epsilon(1e-10));
}

TEST_CASE("hydrostatic states") {
  SUBCASE("constant force") {
    const auto mesh = annulus(16, 32, 1.2);
    ProblemData d{mesh, ForcePotential::constant(0.4, 2), GasLaw::gamma_law(1.0, 2.0)};
    const auto m = make_model(d, 0.1);
    const auto tests = make_test_set(*mesh, default_subset(*mesh));
    const auto s = m.uniform_state(0.0);
    CHECK(weak_residual_mass(m, s, tests) < 1e-12);
    CHECK(weak_residual_momentum(m, s, tests) < 1e-10);
  }
  SUBCASE("point source balance improves under refinement") {
    int nr = 12, na = 24;
    double grading = 1.3;
    std::vector<double> res;
    for (int level = 0; level < 3; ++level) {
      const auto mesh = annulus(nr, na, grading);
      const auto d = source_problem(mesh);
      const auto m = make_model(d, 0.1);
      const auto tests = make_test_set(*mesh, default_subset(*mesh));
      const auto s = m.uniform_state(0.0);
      CHECK(weak_residual_mass(m, s, tests) < 1e-12);
      res.push_back(weak_residual_momentum(m, s, tests));
      nr *= 2;
      na *= 2;
      grading = std::sqrt(grading);
    }
    // At least first order in the mesh size, which halves per level.
    CHECK(res[1] <= 0.5 * res[0]);
    CHECK(res[2] <= 0.5 * res[1]);
  }
}

TEST_CASE("far-field decay") {
  SUBCASE("uniform free-space state has nothing to fit") {
    auto disk = std::make_shared<const ExteriorMesh>(generate_disk_2d(20.0, 12, 32));
    ProblemData d{disk, ForcePotential::constant(0.0, 2), GasLaw::gamma_law(1.0, 2.0)};
    const auto m = make_model(d, 0.1);
    CHECK_THROWS_AS(farfield_decay_fit(m, m.uniform_state(0.3)), FitError);
  }
  SUBCASE("near-incompressible cylinder") {
    const auto mesh = annulus(24, 48, 1.15);
    ProblemData d{mesh, ForcePotential::constant(0.0, 2), GasLaw::gamma_law(100.0, 2.0)};
    const auto m = make_model(d, 0.1);
    const auto rec = solve_certified(m, 1.0, d);
    const auto fit = farfield_decay_fit(m, rec.state);
    CHECK(fit.exponent == Approx(2.0).epsilon(0.15));
    CHECK(fit.annulus_maxima.size() >= 5);
    for (std::size_t i = 1; i < fit.annulus_maxima.size(); ++i)
      CHECK(fit.annulus_maxima[i].first > fit.annulus_maxima[i - 1].first);
  }
}

TEST_CASE("diagnostics report") {
  const auto d = source_problem(annulus(16, 32, 1.2));
  const auto m = make_model(d, 0.05);
  const auto seq = build_sequence(m, 0.5, 3, d);
  const auto tests = make_test_set(m.mesh(), seq.subset);
  const auto rows = diagnose(m, seq, tests);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.mass_residual >= 0);
    CHECK(r.momentum_residual >= 0);
  }
  const std::string csv = diagnostics_csv(rows);
  CHECK(csv.rfind("member,q_infinity,max_mach,mass_residual,momentum_residual,decay_exponent\n",
                  0) == 0);
  CHECK(std::string(kLimitGapNote).find("weak solution") != std::string::npos);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "potflow/bers_continuation.hpp"

using namespace potflow;
using doctest::Approx;

namespace {

std::shared_ptr<const ExteriorMesh> benchmark_mesh() {
  static const auto mesh =
      std::make_shared<const ExteriorMesh>(generate_annulus_2d(1.0, 20.0, 24, 48, 1.15));
  return mesh;
}

std::shared_ptr<const ExteriorMesh> coarse_mesh() {
  static const auto mesh =
      std::make_shared<const ExteriorMesh>(generate_annulus_2d(1.0, 20.0, 16, 32, 1.2));
  return mesh;
}

ProblemData source_problem(std::shared_ptr<const ExteriorMesh> mesh) {
  return {std::move(mesh), ForcePotential::point_sources({{{0.0, 0.0, 0.0}, 0.5}}, 2),
          GasLaw::gamma_law(1.0, 2.0)};
}

double max_speed(const EnergyModel& m, const FlowState& s) {
  const auto f = m.fields(s);
  double v = 0;
  for (double x : f.speed_sq) v = std::max(v, x);
  return std::sqrt(v);
}

}  // namespace

TEST_CASE("mach ratio") {
  SUBCASE("zero field") {
    const auto d = source_problem(coarse_mesh());
    const auto m = make_model(d, 0.1);
    CHECK(max_mach_ratio(m, m.uniform_state(0.0)).value == 0.0);
  }
  SUBCASE("isothermal denominator") {
    ProblemData d{coarse_mesh(), ForcePotential::constant(0.0, 2), GasLaw::isothermal(1.5)};
    const auto m = make_model(d, 0.1);
    const auto rec = solve_certified(m, 0.3, d);
    CHECK(rec.max_mach_ratio == Approx(max_speed(m, rec.state) / std::sqrt(1.5)).epsilon(1e-12));
  }
  SUBCASE("near-incompressible maximum sits at the poles") {
    ProblemData d{benchmark_mesh(), ForcePotential::constant(0.0, 2),
                  GasLaw::gamma_law(100.0, 2.0)};
    const auto m = make_model(d, 0.1);
    const auto rec = solve_certified(m, 1.0, d);
    const double angle = std::atan2(rec.argmax[1], rec.argmax[0]);
    const double cell = 2 * std::numbers::pi / 48;
    CHECK(std::abs(std::abs(angle) - std::numbers::pi / 2) < cell);
    CHECK(std::hypot(rec.argmax[0], rec.argmax[1]) < 1.0 + 0.2);
    CHECK(max_speed(m, rec.state) == Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("certification") {
  const auto d = source_problem(coarse_mesh());
  const auto m = make_model(d, 0.1);
  const double q_small = 0.01 * d.law.critical_speed(m.disc().psi_range().min);
  const auto small = solve_certified(m, q_small, d);
  CHECK(small.certified_subsonic);
  CHECK(small.max_mach_ratio < 0.1 * (1 - 2 * 0.1));
  CHECK(small.report.cutoff_active_cells == 0);

  const auto fast = solve_certified(m, 1.2, d);
  CHECK_FALSE(fast.certified_subsonic);
  CHECK(fast.max_mach_ratio >= 1 - 2 * 0.1);
  CHECK(fast.report.converged);
  CHECK(fast.report.cutoff_active_cells > 0);
}

TEST_CASE("sweep") {
  const auto d = source_problem(benchmark_mesh());
  const auto zero = sweep({0.0}, 0.1, d);
  REQUIRE(zero.records.size() == 1);
  CHECK(zero.records[0].max_mach_ratio == 0.0);
  CHECK_THROWS_AS(sweep({0.2, 0.1}, 0.1, d), ValidationError);

  const auto res = sweep({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, 0.1, d);
  REQUIRE_FALSE(res.error);
  REQUIRE(res.records.size() == 6);
  for (std::size_t i = 1; i < res.records.size(); ++i)
    CHECK(res.records[i].max_mach_ratio >= res.records[i - 1].max_mach_ratio);
  const auto m2 = make_model(d, 0.05);
  int certified = 0;
  for (const auto& r : res.records) {
    if (!r.certified_subsonic) continue;
    ++certified;
    CHECK(r.report.cutoff_active_cells == 0);
    // Soundness: with a smaller cut-off parameter the solution is unchanged.
    const auto again = solve_certified(m2, r.q_infinity, d);
    CHECK(gradient_l2_distance(m2, r.state.phi, again.state.phi) < 1e-8);
  }
  CHECK(certified >= 3);
  CHECK_FALSE(res.records.back().certified_subsonic);

  const std::string csv = continuation_csv(res.records);
  CHECK(csv.rfind("theta,q_infinity,max_mach_ratio,certified,iterations,energy\n", 0) == 0);
}

TEST_CASE("warm start equals cold start") {
  const auto d = source_problem(benchmark_mesh());
  const auto m = make_model(d, 0.1);
  const auto first = solve_certified(m, 0.35, d);
  const auto warm = solve_certified(m, 0.45, d, &first.state);
  const auto cold = solve_certified(m, 0.45, d);
  CHECK(gradient_l2_distance(m, warm.state.phi, cold.state.phi) < 1e-8);
  CHECK(warm.report.iterations <= cold.report.iterations);
}

TEST_CASE("continuity probe") {
  const auto d = source_problem(benchmark_mesh());
  const auto p = continuity_probe(0.3, {0.04, 0.02, 0.01}, 0.1, d);
  REQUIRE(p.differences.size() == 3);
  for (int i = 1; i < 3; ++i) {
    const double ratio = p.differences[i] / p.differences[i - 1];
    CHECK(ratio > 0.5 * 0.7);
    CHECK(ratio < 0.5 * 1.3);
  }
}

TEST_CASE("critical speed search") {
  SUBCASE("point source schedule") {
    const auto d = source_problem(benchmark_mesh());
    const auto res = critical_qhat(default_theta_schedule(), d);
    REQUIRE(res.stages.size() == 4);
    CHECK(res.nondecreasing);
    CHECK(res.bracket_invariant);
    for (std::size_t i = 1; i < res.stages.size(); ++i)
      CHECK(res.stages[i].q_certified >= res.stages[i - 1].q_certified);
    CHECK(res.q_hat == res.stages.back().q_certified);
    for (const auto& st : res.stages) {
      CHECK_FALSE(st.capped);
      CHECK(st.tol_q > 0);
      for (std::size_t k = 1; k < st.brackets.size(); ++k) {
        const double w0 = st.brackets[k - 1].upper - st.brackets[k - 1].lower;
        const double w1 = st.brackets[k].upper - st.brackets[k].lower;
        CHECK(w1 == Approx(0.5 * w0).epsilon(1e-12));
      }
      CHECK(st.brackets.back().upper - st.brackets.back().lower <= st.tol_q);
      for (const auto& r : st.records) {
        bool is_lower = false, is_upper = false;
        for (const auto& b : st.brackets) {
          is_lower = is_lower || r.q_infinity == b.lower;
          is_upper = is_upper || r.q_infinity == b.upper;
        }
        if (is_lower && r.q_infinity > 0) CHECK(r.certified_subsonic);
        if (is_upper) CHECK_FALSE(r.certified_subsonic);
      }
    }
  }
  SUBCASE("isothermal bound") {
    ProblemData d{coarse_mesh(), ForcePotential::constant(0.0, 2), GasLaw::isothermal(1.0)};
    const auto res = critical_qhat({0.1, 0.05}, d);
    CHECK(res.q_hat <= 1.0);
    CHECK(res.q_hat > 0.2);
    CHECK(res.nondecreasing);
  }
  SUBCASE("near-incompressible search stops at the cap") {
    ProblemData d{coarse_mesh(), ForcePotential::constant(0.0, 2), GasLaw::gamma_law(100.0, 2.0)};
    CriticalOptions opts;
    opts.upper_override = 1.0;
    const auto res = critical_qhat({0.1}, d, opts);
    REQUIRE(res.stages.size() == 1);
    CHECK(res.stages[0].capped);
    CHECK(res.q_hat == 1.0);
  }
  SUBCASE("single stage is plain bisection") {
    const auto d = source_problem(coarse_mesh());
    const auto res = critical_qhat({0.1}, d);
    REQUIRE(res.stages.size() == 1);
    const auto& st = res.stages[0];
    CHECK(st.brackets.front().lower == 0.0);
    CHECK(st.brackets.front().upper == Approx(1.5 * d.law.sound_speed(1.0)).epsilon(1e-14));
    CHECK(res.bracket_invariant);
  }
  SUBCASE("schedule validation") {
    const auto d = source_problem(coarse_mesh());
    CHECK_THROWS_AS(critical_qhat({}, d), ScheduleError);
    CHECK_THROWS_AS(critical_qhat({0.05, 0.1}, d), ScheduleError);
    CHECK_THROWS_AS(critical_qhat({0.5}, d), ScheduleError);
    CHECK_THROWS_AS(critical_qhat({0.1, 0.0}, d), ScheduleError);
    CHECK_THROWS_AS(make_model(d, 0.6), ScheduleError);
  }
}

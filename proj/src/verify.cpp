#include "potflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "potflow/sonic_limit.hpp"

namespace potflow {
namespace {

FlowState shifted(const EnergyModel& model, const FlowState& s, const std::vector<double>& d,
                  double t) {
  FlowState out = s;
  const auto& fv = model.disc().free_vertices();
  for (std::size_t k = 0; k < fv.size(); ++k) out.phi[fv[k]] += t * d[k];
  return out;
}

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> random_direction(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> d(n);
  for (double& x : d) x = u(rng);
  const double s = norm2(d);
  for (double& x : d) x /= s;
  return d;
}

}  // namespace

double fd_gradient_error(const EnergyModel& model, const FlowState& s,
                         const std::vector<double>& direction, double step) {
  const auto a = model.assemble(s, AssembleOrder::Gradient);
  double exact = 0;
  for (std::size_t k = 0; k < direction.size(); ++k) exact += a.gradient[k] * direction[k];
  auto J = [&](double t) {
    return model.assemble(shifted(model, s, direction, t), AssembleOrder::Value).energy;
  };
  const double fd = (8 * (J(step) - J(-step)) - (J(2 * step) - J(-2 * step))) / (12 * step);
  return std::abs(fd - exact) / std::max(std::abs(exact), 1e-300);
}

double fd_hessian_error(const EnergyModel& model, const FlowState& s,
                        const std::vector<double>& direction, double step) {
  const auto a = model.assemble(s, AssembleOrder::Hessian);
  std::vector<double> hd(direction.size());
  a.hessian.multiply(direction, hd);
  auto g = [&](double t) {
    return model.assemble(shifted(model, s, direction, t), AssembleOrder::Gradient).gradient;
  };
  const auto gp1 = g(step), gm1 = g(-step), gp2 = g(2 * step), gm2 = g(-2 * step);
  double err = 0;
  for (std::size_t k = 0; k < hd.size(); ++k) {
    const double fd = (8 * (gp1[k] - gm1[k]) - (gp2[k] - gm2[k])) / (12 * step);
    err += (fd - hd[k]) * (fd - hd[k]);
  }
  return std::sqrt(err) / std::max(norm2(hd), 1e-300);
}

std::vector<PropertyCheck> verify_problem(const ProblemData& data, double theta,
                                          double q_infinity, std::uint64_t seed) {
  std::vector<PropertyCheck> out;
  auto add = [&](std::string name, bool ok, double value, double limit, std::string note = {}) {
    out.push_back({std::move(name), ok, value, limit, std::move(note)});
  };
  const GasLaw& law = data.law;

  double rt = 0;
  for (int i = 0; i < 200; ++i) {
    const double rho = std::pow(10.0, -3.0 + 6.0 * i / 199.0);
    if (rho > law.rho_max() || rho < law.rho_floor()) continue;
    rt = std::max(rt, std::abs(law.h_inv(law.h(rho)) - rho) / rho);
  }
  add("enthalpy round trip", rt < 1e-10, rt, 1e-10);

  const EnergyModel model = make_model(data, theta);
  const PsiRange range = model.disc().psi_range();
  double mach1 = 0;
  for (int i = 0; i < 50; ++i) {
    const double w = range.min + (range.max - range.min) * i / 49.0;
    const double rho = law.H_inv(w);
    mach1 = std::max(mach1, std::abs(law.critical_speed(w) / law.sound_speed(rho) - 1.0));
  }
  add("critical speed is sonic", mach1 < 1e-8, mach1, 1e-8);

  const auto eb = ellipticity_scan(model.cutoff(), ScanGrid{});
  add("ellipticity lower bound", eb.lambda_min > 0, eb.lambda_min, 0.0);

  const ContinuationRecord rec = solve_certified(model, q_infinity, data);
  add("newton convergence", rec.report.converged, rec.report.gradient_norm, data.solver.tol,
      rec.relaxed_tolerance ? "near-sonic options" : "");

  std::mt19937_64 rng(seed);
  const std::size_t n = model.disc().num_free();
  const double scale = std::max(q_infinity, 0.1) * model.mesh().obstacle_radius();
  FlowState probe = rec.state;
  std::uniform_real_distribution<double> noise(-0.03 * scale, 0.03 * scale);
  for (Index v : model.disc().free_vertices()) probe.phi[v] += noise(rng);
  const auto dir = random_direction(n, rng);
  const double gerr = fd_gradient_error(model, probe, dir, 1e-2 * scale);
  add("gradient vs finite differences", gerr < 1e-6, gerr, 1e-6);
  const double herr = fd_hessian_error(model, probe, dir, 1e-2 * scale);
  add("hessian vs finite differences", herr < 1e-6, herr, 1e-6);
  const double asym = model.assemble(probe, AssembleOrder::Hessian).hessian.asymmetry();
  add("hessian symmetry", asym == 0.0, asym, 0.0);

  FlowState second = shifted(model, model.uniform_state(q_infinity), random_direction(n, rng),
                             0.1 * scale * std::sqrt(static_cast<double>(n)));
  SolverOptions opts = rec.relaxed_tolerance ? data.near_sonic : data.solver;
  try {
    newton_solve(model, second, opts);
    const double dist = gradient_l2_distance(model, rec.state.phi, second.phi);
    add("uniqueness from two starts", dist < 1e-8, dist, 1e-8);
  } catch (const Error& e) {
    add("uniqueness from two starts", false, std::numeric_limits<double>::quiet_NaN(), 1e-8,
        e.what());
  }

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rec.report.history.size(); ++i) {
    const auto& h = rec.report.history[i];
    if (h.roundoff_step) continue;
    worst = std::max(worst, h.energy - rec.report.history[i - 1].energy);
  }
  add("energy decreases on line-search steps", worst <= 0, std::max(worst, 0.0), 0.0);

  const BoundaryFlux flux = mass_flux_check(model, rec.state);
  const double flux_limit = 1e-3 * std::max(q_infinity, 1.0) * 2 * model.mesh().obstacle_radius();
  add("obstacle mass flux", std::abs(flux.obstacle) < flux_limit, std::abs(flux.obstacle),
      flux_limit);

  if (rec.certified_subsonic) {
    add("certified record has inactive cut-off", rec.report.cutoff_active_cells == 0,
        rec.report.cutoff_active_cells, 0.0);
    const PhysicalFields pf = physical_fields(model, rec.state);
    const CellFields cf = model.fields(rec.state);
    double bern = 0;
    for (std::size_t c = 0; c < pf.rho.size(); ++c) {
      const double lhs = 0.5 * cf.speed_sq[c] + law.h(pf.rho[c]);
      const double w = model.disc().psi(c);
      bern = std::max(bern, std::abs(lhs - w) / (1 + std::abs(w)));
    }
    add("bernoulli closure on certified record", bern < 1e-10, bern, 1e-10);
  } else {
    add("certified record has inactive cut-off", true, rec.max_mach_ratio, 1 - 2 * theta,
        "not certified, skipped");
  }
  return out;
}

}  // namespace potflow

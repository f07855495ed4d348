#include "potflow/sonic_limit.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace potflow {

const char* const kLimitGapNote =
    "The continuum limit is a weak solution on the unbounded exterior domain. At fixed mesh and "
    "truncation radius this report can only exhibit uniformly bounded weak residuals and Cauchy "
    "behaviour of the approximating sequence.";

CompactSubset default_subset(const ExteriorMesh& mesh) {
  return {1.5 * mesh.obstacle_radius(), 0.5 * mesh.outer_radius()};
}

LimitSequence build_sequence(const EnergyModel& model, double q_hat, int n_steps,
                             const ProblemData& data) {
  if (n_steps < 3) throw ValidationError("a limit sequence needs at least 3 members");
  if (!(q_hat > 0.0)) throw ValidationError("q_hat must be positive");
  LimitSequence seq{q_hat, model.theta(), default_subset(model.mesh()), {}};
  const FlowState* warm = nullptr;
  for (int k = 1; k <= n_steps; ++k) {
    const double q = q_hat * (1.0 - std::ldexp(1.0, -k));
    seq.members.push_back(solve_certified(model, q, data, warm));
    warm = &seq.members.back().state;
  }
  return seq;
}

namespace {
bool in_subset(const Vec3& x, CompactSubset s) {
  const double r = norm(x);
  return r > s.r_min && r < s.r_max;
}
}  // namespace

std::vector<std::vector<double>> cauchy_table(const EnergyModel& model, const LimitSequence& seq) {
  const std::size_t n = seq.members.size();
  std::vector<std::vector<double>> grads;
  for (const auto& m : seq.members) grads.push_back(model.cell_gradients(m.state.phi));
  std::vector<char> inside(model.disc().num_cells());
  for (std::size_t c = 0; c < inside.size(); ++c)
    inside[c] = in_subset(model.mesh().barycenter(c), seq.subset);
  std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < inside.size(); ++c) {
        if (!inside[c]) continue;
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double d = grads[i][4 * c + k] - grads[j][4 * c + k];
          d2 += d * d;
        }
        s += model.disc().volume(c) * d2;
      }
      t[i][j] = t[j][i] = std::sqrt(s);
    }
  return t;
}

double Bump::value(const Vec3& x) const {
  const double s = dot(x - center, x - center) / (radius * radius);
  if (s >= 1.0) return 0.0;
  const double a = 1.0 - s;
  return a * a * a;
}

Vec3 Bump::gradient(const Vec3& x) const {
  const Vec3 d = x - center;
  const double s = dot(d, d) / (radius * radius);
  if (s >= 1.0) return {0.0, 0.0, 0.0};
  const double a = 1.0 - s;
  return (-6.0 * a * a / (radius * radius)) * d;
}

TestSet make_test_set(const ExteriorMesh& mesh, CompactSubset subset, int n_bumps,
                      std::uint64_t seed) {
  TestSet t;
  const std::size_t nv = mesh.num_vertices();
  std::vector<char> ok(nv, 1);
  for (std::size_t v = 0; v < nv; ++v)
    if (!in_subset(mesh.vertices()[v], subset)) ok[v] = 0;
  // A hat is supported in the subset when every vertex of every incident
  // cell lies inside.
  std::vector<char> hat(nv, 1);
  for (const auto& cell : mesh.cells()) {
    bool all = true;
    for (int i = 0; i <= mesh.dim(); ++i) all = all && ok[cell[i]];
    if (!all)
      for (int i = 0; i <= mesh.dim(); ++i) hat[cell[i]] = 0;
  }
  for (std::size_t v = 0; v < nv; ++v)
    if (hat[v] && ok[v]) t.hat_vertices.push_back(static_cast<Index>(v));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double width = subset.r_max - subset.r_min;
  for (int b = 0; b < n_bumps; ++b) {
    const double radius = width * (0.1 + 0.15 * u01(rng));
    const double rc = subset.r_min + radius + (width - 2.0 * radius) * u01(rng);
    Vec3 dir{gauss(rng), gauss(rng), mesh.dim() == 3 ? gauss(rng) : 0.0};
    dir = normalized(dir);
    t.bumps.push_back({rc * dir, radius});
  }
  return t;
}

PhysicalFields physical_fields(const EnergyModel& model, const FlowState& state) {
  const auto g = model.cell_gradients(state.phi);
  const std::size_t nc = model.disc().num_cells();
  PhysicalFields f;
  f.u.resize(nc);
  f.rho.resize(nc);
  f.p.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    f.u[c] = {g[4 * c], g[4 * c + 1], g[4 * c + 2]};
    f.rho[c] = model.law().bernoulli_density(dot(f.u[c], f.u[c]), model.disc().psi(c)).rho;
    f.p[c] = model.law().pressure(f.rho[c]).p;
  }
  return f;
}

namespace {

// Integrates a per-cell integrand against each test function, using the
// barycenter value of the test function and its cell-constant gradient.
template <class Integrand>
double max_normalized(const EnergyModel& model, const TestSet& tests, Integrand&& integrand) {
  const ExteriorMesh& m = model.mesh();
  const Discretization& d = model.disc();
  const int nloc = m.dim() + 1;
  std::vector<std::vector<std::pair<Index, int>>> incident(m.num_vertices());
  for (std::size_t c = 0; c < m.num_cells(); ++c)
    for (int i = 0; i < nloc; ++i) incident[m.cells()[c][i]].push_back({static_cast<Index>(c), i});

  double worst = 0.0;
  const double chi_hat = 1.0 / nloc;
  for (Index v : tests.hat_vertices) {
    std::array<double, 3> acc{};
    double n2 = 0.0;
    for (const auto& [c, i] : incident[v]) {
      const Vec3 gl = d.grad_lambda(c, i);
      integrand(static_cast<std::size_t>(c), chi_hat, gl, acc);
      n2 += d.volume(c) * dot(gl, gl);
    }
    for (double a : acc) worst = std::max(worst, std::abs(a) / std::sqrt(n2));
  }
  // Bumps enter through their P1 interpolants, so that integrals of their
  // derivatives vanish exactly like those of the hats.
  std::vector<double> nodal(m.num_vertices());
  for (const Bump& b : tests.bumps) {
    for (std::size_t v = 0; v < nodal.size(); ++v) nodal[v] = b.value(m.vertices()[v]);
    std::array<double, 3> acc{};
    double n2 = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
      double chi = 0.0;
      Vec3 gc{0.0, 0.0, 0.0};
      for (int i = 0; i < nloc; ++i) {
        const double nv = nodal[m.cells()[c][i]];
        if (nv == 0.0) continue;
        chi += nv;
        gc = gc + nv * d.grad_lambda(c, i);
      }
      if (chi == 0.0) continue;
      integrand(c, chi / nloc, gc, acc);
      n2 += d.volume(c) * dot(gc, gc);
    }
    if (n2 > 0.0)
      for (double a : acc) worst = std::max(worst, std::abs(a) / std::sqrt(n2));
  }
  return worst;
}

}  // namespace

double weak_residual_mass(const EnergyModel& model, const FlowState& state, const TestSet& tests) {
  const PhysicalFields f = physical_fields(model, state);
  const Discretization& d = model.disc();
  return max_normalized(model, tests,
                        [&](std::size_t c, double, const Vec3& gchi, std::array<double, 3>& acc) {
                          acc[0] += d.volume(c) * f.rho[c] * dot(f.u[c], gchi);
                        });
}

double weak_residual_momentum(const EnergyModel& model, const FlowState& state,
                              const TestSet& tests) {
  const PhysicalFields f = physical_fields(model, state);
  const Discretization& d = model.disc();
  const int dim = model.mesh().dim();
  return max_normalized(
      model, tests, [&](std::size_t c, double chi, const Vec3& gchi, std::array<double, 3>& acc) {
        const double ugc = dot(f.u[c], gchi);
        for (int k = 0; k < dim; ++k)
          acc[k] += d.volume(c) * (f.rho[c] * f.u[c][k] * ugc + f.p[c] * gchi[k] +
                                   f.rho[c] * d.grad_psi(c)[k] * chi);
      });
}

DecayFit farfield_decay_fit(const EnergyModel& model, const FlowState& state, int n_annuli) {
  const ExteriorMesh& m = model.mesh();
  const double a = m.obstacle_radius();
  const double lo = a > 0.0 ? 2.0 * a : 0.1 * m.outer_radius();
  const double hi = 0.8 * m.outer_radius();
  if (!(hi > lo) || n_annuli < 5) throw FitError("need at least 5 annuli inside (2a, 0.8R)");
  const auto g = model.cell_gradients(state.phi);
  std::vector<std::pair<double, double>> maxima(n_annuli, {0.0, 0.0});
  const double step = std::log(hi / lo) / n_annuli;
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    const Vec3 x = m.barycenter(c);
    const double r = norm(x);
    if (r <= lo || r >= hi) continue;
    const int k = std::min(n_annuli - 1, static_cast<int>(std::log(r / lo) / step));
    const Vec3 dev{g[4 * c] - state.q_infinity, g[4 * c + 1], g[4 * c + 2]};
    const double dn = norm(dev);
    if (dn > maxima[k].second) maxima[k] = {r, dn};
  }
  DecayFit fit{0.0, {}};
  std::vector<double> xs, ys;
  for (const auto& [r, dv] : maxima) {
    if (dv < 1e-12) continue;
    fit.annulus_maxima.emplace_back(r, dv);
    xs.push_back(std::log(r));
    ys.push_back(std::log(dv));
  }
  if (xs.empty()) throw FitError("far-field deviation below 1e-12 everywhere: nothing to fit");
  if (xs.size() < 5) throw FitError("fewer than 5 annuli carry a measurable deviation");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  fit.exponent = -sxy / sxx;
  return fit;
}

std::vector<MemberDiagnostics> diagnose(const EnergyModel& model, const LimitSequence& seq,
                                        const TestSet& tests) {
  std::vector<MemberDiagnostics> rows;
  for (const auto& m : seq.members) {
    MemberDiagnostics r{m.q_infinity, m.max_mach_ratio, weak_residual_mass(model, m.state, tests),
                        weak_residual_momentum(model, m.state, tests),
                        std::numeric_limits<double>::quiet_NaN()};
    try {
      r.decay_exponent = farfield_decay_fit(model, m.state).exponent;
    } catch (const FitError&) {
    }
    rows.push_back(r);
  }
  return rows;
}

std::string diagnostics_csv(const std::vector<MemberDiagnostics>& rows) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "member,q_infinity,max_mach,mass_residual,momentum_residual,decay_exponent\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    out << i << ',' << rows[i].q_infinity << ',' << rows[i].max_mach << ',' << rows[i].mass_residual
        << ',' << rows[i].momentum_residual << ',' << rows[i].decay_exponent << '\n';
  return out.str();
}

}  // namespace potflow

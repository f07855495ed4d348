#include "potflow/force_field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "potflow/errors.hpp"
#include "potflow/quadrature.hpp"

namespace potflow {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kGaussOrder = 4;
constexpr int kMaxRefineDepth = 10;

struct Bounding {
  Vec3 center;
  double radius;
};

Bounding bounding_sphere(const SphericalCell& c) {
  const Vec3 mid_dir = normalized(c.dirs[0] + c.dirs[1] + c.dirs[2]);
  const Vec3 center = (0.5 * (c.r0 + c.r1)) * mid_dir;
  double rad = 0.0;
  for (double r : {c.r0, c.r1})
    for (const auto& d : c.dirs) rad = std::max(rad, norm(r * d - center));
  rad = std::max(rad, norm(c.r1 * mid_dir - center));
  return {center, rad};
}

// Tensor Gauss rule on a cone-shell cell: Gauss in r times a collapsed
// (Duffy) Gauss rule on the flat triangle, projected radially.
template <class Visit>
void for_each_node(const SphericalCell& c, Visit&& visit) {
  const GaussRule& g = gauss_legendre(kGaussOrder);
  const Vec3& d0 = c.dirs[0];
  const Vec3 e1 = c.dirs[1] - d0, e2 = c.dirs[2] - d0;
  const Vec3 nrm = cross(e1, e2);
  const double twice_area = norm(nrm);
  const Vec3 unit_n = (1.0 / twice_area) * nrm;
  for (int a = 0; a < kGaussOrder; ++a) {
    const double u = 0.5 * (g.nodes[a] + 1.0), wu = 0.5 * g.weights[a];
    for (int b = 0; b < kGaussOrder; ++b) {
      const double v = 0.5 * (g.nodes[b] + 1.0), wv = 0.5 * g.weights[b];
      const Vec3 y = d0 + (u * (1.0 - v)) * e1 + (u * v) * e2;
      const double ylen = norm(y);
      const Vec3 s = (1.0 / ylen) * y;
      const double d_omega = wu * wv * u * twice_area * std::abs(dot(s, unit_n)) / (ylen * ylen);
      for (int k = 0; k < kGaussOrder; ++k) {
        const double half = 0.5 * (c.r1 - c.r0);
        const double r = c.r0 + half * (g.nodes[k] + 1.0);
        visit(r * s, half * g.weights[k] * r * r * d_omega);
      }
    }
  }
}

void accumulate_cell(const SphericalCell& c, const Vec3& x, double scale, int depth,
                     double& value, Vec3& grad) {
  const Bounding b = bounding_sphere(c);
  const double dist = norm(x - b.center) - b.radius;
  if (depth < kMaxRefineDepth && dist < 4.0 * b.radius) {
    const Vec3 m01 = normalized(c.dirs[0] + c.dirs[1]);
    const Vec3 m12 = normalized(c.dirs[1] + c.dirs[2]);
    const Vec3 m20 = normalized(c.dirs[2] + c.dirs[0]);
    const std::array<std::array<Vec3, 3>, 4> tris{{{c.dirs[0], m01, m20},
                                                   {c.dirs[1], m12, m01},
                                                   {c.dirs[2], m20, m12},
                                                   {m01, m12, m20}}};
    const double rm = 0.5 * (c.r0 + c.r1);
    for (const auto& t : tris) {
      accumulate_cell({c.r0, rm, t}, x, scale, depth + 1, value, grad);
      accumulate_cell({rm, c.r1, t}, x, scale, depth + 1, value, grad);
    }
    return;
  }
  for_each_node(c, [&](const Vec3& y, double w) {
    const Vec3 d = x - y;
    const double r = norm(d);
    value += scale * w / r;
    grad = grad - (scale * w / (r * r * r)) * d;
  });
}

std::vector<std::pair<double, double>> read_two_columns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) throw ParseError(lineno, "expected two columns");
    rows.emplace_back(a, b);
  }
  return rows;
}

}  // namespace

ForcePotential::ForcePotential(Kind kind, int dimension) : kind_(std::move(kind)), dim_(dimension) {
  if (dim_ != 2 && dim_ != 3) throw DomainError("force dimension must be 2 or 3");
  if (auto* nb = std::get_if<NewtonianBody>(&kind_)) {
    if (dim_ != 3) throw DomainError("Newtonian body forces are three-dimensional");
    if (nb->cell_density.size() != nb->body.cells.size())
      throw DomainError("one obstacle density per obstacle cell required");
    if (!(nb->gravitational_constant > 0.0))
      throw DomainError("gravitational constant must be positive");
  }
  if (auto* rp = std::get_if<RadialProfile>(&kind_)) {
    std::vector<double> r, p;
    for (auto [ri, pi] : rp->samples) {
      r.push_back(ri);
      p.push_back(pi);
    }
    profile_ = MonotoneCubic(r, p);
  }
  if (auto* ps = std::get_if<PointSources>(&kind_)) {
    for (const auto& s : ps->sources)
      if (dim_ == 2 && s.center[2] != 0.0)
        throw DomainError("2D point sources must lie in the plane");
  }
}

ForcePotential ForcePotential::constant(double value, int dimension) {
  return ForcePotential(ConstantPotential{value}, dimension);
}

ForcePotential ForcePotential::point_sources(std::vector<PointSource> sources, int dimension) {
  return ForcePotential(PointSources{std::move(sources)}, dimension);
}

ForcePotential ForcePotential::newtonian_body(ObstacleInterior body, double uniform_density,
                                              double gravitational_constant) {
  std::vector<double> density(body.cells.size(), uniform_density);
  return ForcePotential(NewtonianBody{std::move(body), std::move(density), gravitational_constant},
                        3);
}

ForcePotential ForcePotential::radial_profile(std::vector<std::pair<double, double>> samples,
                                              int dimension) {
  return ForcePotential(RadialProfile{std::move(samples)}, dimension);
}

ForcePotential ForcePotential::load_radial_profile(const std::filesystem::path& path,
                                                   int dimension) {
  return radial_profile(read_two_columns(path), dimension);
}

ForcePotential::NewtonianEval ForcePotential::newtonian(const NewtonianBody& nb,
                                                        const Vec3& x) const {
  double value = 0.0;
  Vec3 grad{0, 0, 0};
  for (std::size_t c = 0; c < nb.body.cells.size(); ++c) {
    if (nb.cell_density[c] == 0.0) continue;
    accumulate_cell(nb.body.cells[c], x, nb.gravitational_constant * nb.cell_density[c], 0,
                    value, grad);
  }
  return {value, grad};
}

double ForcePotential::psi(const Vec3& x) const {
  return std::visit(
      Overloaded{[](const ConstantPotential& c) { return c.value; },
                 [&x](const PointSources& ps) {
                   double v = 0.0;
                   for (const auto& s : ps.sources) {
                     const double r = norm(x - s.center);
                     if (r < 1e-14) throw SingularityError("psi evaluated at a point source");
                     v += s.strength / r;
                   }
                   return v;
                 },
                 [&](const NewtonianBody& nb) { return newtonian(nb, x).value; },
                 [&](const RadialProfile&) {
                   const double r = norm(x);
                   if (r <= profile_.front_x()) return profile_.ys().front();
                   if (r >= profile_.back_x()) return profile_.ys().back();
                   return profile_.eval(r).value;
                 }},
      kind_);
}

Vec3 ForcePotential::grad_psi(const Vec3& x) const {
  return std::visit(
      Overloaded{[](const ConstantPotential&) { return Vec3{0, 0, 0}; },
                 [&x](const PointSources& ps) {
                   Vec3 g{0, 0, 0};
                   for (const auto& s : ps.sources) {
                     const Vec3 d = x - s.center;
                     const double r = norm(d);
                     if (r < 1e-14) throw SingularityError("grad psi evaluated at a point source");
                     g = g - (s.strength / (r * r * r)) * d;
                   }
                   return g;
                 },
                 [&](const NewtonianBody& nb) { return newtonian(nb, x).grad; },
                 [&](const RadialProfile&) {
                   const double r = norm(x);
                   if (r <= profile_.front_x() || r >= profile_.back_x()) return Vec3{0, 0, 0};
                   return (profile_.eval(r).d1 / r) * x;
                 }},
      kind_);
}

PsiRange psi_range(const ForcePotential& f, const ExteriorMesh& mesh) {
  PsiRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double v = f.psi(mesh.barycenter(c));
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  return r;
}

double predicted_decay_exponent(int n, double q_exp, double beta) {
  return std::min(0.5 * n, beta + n / q_exp - 1.0);
}

DecayReport decay_report(const ForcePotential& f, const ExteriorMesh& mesh, double q_exp,
                         double beta) {
  const int n = mesh.dim();
  const double p_low = 2.0 * n / (n + 2.0);
  DecayReport rep{};
  rep.predicted_beta_prime = predicted_decay_exponent(n, q_exp, beta);

  std::vector<double> radius(mesh.num_cells()), gmag(mesh.num_cells());
  double sum_low = 0.0, sum_weighted = 0.0;
  double r_min = std::numeric_limits<double>::infinity(), r_max = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const Vec3 x = mesh.barycenter(c);
    const Vec3 g = f.grad_psi(x);
    const double vol = mesh.cell_volume(c);
    radius[c] = norm(x);
    gmag[c] = norm(g);
    sum_low += vol * std::pow(std::abs(g[0]), p_low);
    sum_weighted += vol * std::pow(std::pow(radius[c], beta) * gmag[c], q_exp);
    r_min = std::min(r_min, radius[c]);
    r_max = std::max(r_max, radius[c]);
  }
  rep.d1psi_norm = std::pow(sum_low, 1.0 / p_low);
  rep.weighted_grad_norm = std::pow(sum_weighted, 1.0 / q_exp);

  double lo = std::max(2.0 * mesh.obstacle_radius(), r_min);
  double hi = 0.9 * (mesh.outer_radius() > 0.0 ? mesh.outer_radius() : r_max);
  if (!(hi > lo)) {
    lo = r_min;
    hi = r_max;
  }
  constexpr int kAnnuli = 8;
  std::vector<std::pair<double, double>> maxima(kAnnuli, {0.0, 0.0});
  const double ratio = std::log(hi / lo) / kAnnuli;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (radius[c] < lo || radius[c] >= hi) continue;
    const int k = std::min(kAnnuli - 1, static_cast<int>(std::log(radius[c] / lo) / ratio));
    if (gmag[c] > maxima[k].second) maxima[k] = {radius[c], gmag[c]};
  }
  std::vector<double> xs, ys;
  for (const auto& [r, g] : maxima) {
    if (g <= 1e-300) continue;
    rep.annulus_maxima.emplace_back(r, g);
    xs.push_back(std::log(r));
    ys.push_back(std::log(g));
  }
  if (xs.size() >= 6) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    rep.fitted_exponent = sxy / sxx;
  }
  return rep;
}

}  // namespace potflow

#include "potflow/energy_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>

namespace potflow {

namespace {

constexpr std::size_t kChunk = 1024;

// Rows of the inverse of the d x d matrix with columns p_i - p_0.
std::array<Vec3, 4> basis_gradients(int dim, const std::array<Vec3, 4>& p) {
  std::array<Vec3, 4> g{};
  if (dim == 2) {
    const double a = p[1][0] - p[0][0], b = p[2][0] - p[0][0];
    const double c = p[1][1] - p[0][1], d = p[2][1] - p[0][1];
    const double det = a * d - b * c;
    g[1] = {d / det, -b / det, 0.0};
    g[2] = {-c / det, a / det, 0.0};
    g[0] = {-(g[1][0] + g[2][0]), -(g[1][1] + g[2][1]), 0.0};
    return g;
  }
  const Vec3 e1 = p[1] - p[0], e2 = p[2] - p[0], e3 = p[3] - p[0];
  const double det = dot(e1, cross(e2, e3));
  g[1] = (1.0 / det) * cross(e2, e3);
  g[2] = (1.0 / det) * cross(e3, e1);
  g[3] = (1.0 / det) * cross(e1, e2);
  g[0] = -1.0 * (g[1] + g[2] + g[3]);
  return g;
}

Vec3 unit_face_normal(const ExteriorMesh& m, std::span<const Index> f) {
  const auto& v = m.vertices();
  if (m.dim() == 2) {
    const Vec3 t = v[f[1]] - v[f[0]];
    return normalized(Vec3{t[1], -t[0], 0.0});
  }
  return normalized(cross(v[f[1]] - v[f[0]], v[f[2]] - v[f[0]]));
}

double face_diameter(const ExteriorMesh& m, std::span<const Index> f) {
  const auto& v = m.vertices();
  double d = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j) d = std::max(d, norm(v[f[i]] - v[f[j]]));
  return d;
}

double norm2(const std::vector<double>& x) {
  return std::sqrt(kernels::active().dot(x.data(), x.data(), x.size()));
}

}  // namespace

Discretization::Discretization(std::shared_ptr<const ExteriorMesh> mesh, const ForcePotential& force)
    : mesh_(std::move(mesh)) {
  const ExteriorMesh& m = *mesh_;
  const int dim = m.dim();
  if (force.dimension() != dim)
    throw ValidationError("force dimension does not match the mesh dimension");
  const std::size_t nc = m.num_cells(), nv = m.num_vertices();
  volume_.resize(nc);
  psi_.resize(nc);
  grad_psi_.resize(nc);
  vertex_.assign(4 * nc, 0);
  grad_lambda_.assign(16 * nc, 0.0);
  range_ = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  for (std::size_t c = 0; c < nc; ++c) {
    const auto& cell = m.cells()[c];
    std::array<Vec3, 4> p{};
    for (int i = 0; i <= dim; ++i) p[i] = m.vertices()[cell[i]];
    const auto g = basis_gradients(dim, p);
    for (int i = 0; i < 4; ++i) {
      vertex_[4 * c + i] = i <= dim ? cell[i] : cell[0];
      for (int k = 0; k < 3; ++k) grad_lambda_[16 * c + 4 * i + k] = i <= dim ? g[i][k] : 0.0;
    }
    volume_[c] = m.cell_volume(c);
    const Vec3 x = m.barycenter(c);
    psi_[c] = force.psi(x);
    grad_psi_[c] = force.grad_psi(x);
    range_.min = std::min(range_.min, psi_[c]);
    range_.max = std::max(range_.max, psi_[c]);
  }

  free_index_.assign(nv, -1);
  for (std::size_t v = 0; v < nv; ++v) {
    if (m.outer_vertex()[v]) continue;
    free_index_[v] = static_cast<Index>(free_vertices_.size());
    free_vertices_.push_back(static_cast<Index>(v));
  }

  const std::size_t nf = free_vertices_.size();
  std::vector<std::vector<std::int32_t>> rows(nf);
  for (std::size_t c = 0; c < nc; ++c)
    for (int i = 0; i <= dim; ++i) {
      const Index fi = free_index_[m.cells()[c][i]];
      if (fi < 0) continue;
      for (int j = 0; j <= dim; ++j) {
        const Index fj = free_index_[m.cells()[c][j]];
        if (fj >= 0) rows[fi].push_back(fj);
      }
    }
  pattern_.n = nf;
  pattern_.row_ptr.assign(nf + 1, 0);
  for (std::size_t r = 0; r < nf; ++r) {
    auto& row = rows[r];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    pattern_.row_ptr[r + 1] = pattern_.row_ptr[r] + static_cast<std::int64_t>(row.size());
  }
  pattern_.col.reserve(pattern_.row_ptr[nf]);
  for (const auto& row : rows) pattern_.col.insert(pattern_.col.end(), row.begin(), row.end());
  pattern_.val.assign(pattern_.col.size(), 0.0);

  position_.assign(16 * nc, -1);
  for (std::size_t c = 0; c < nc; ++c)
    for (int i = 0; i <= dim; ++i) {
      const Index fi = free_index_[m.cells()[c][i]];
      if (fi < 0) continue;
      for (int j = 0; j <= dim; ++j) {
        const Index fj = free_index_[m.cells()[c][j]];
        if (fj >= 0) position_[16 * c + 4 * i + j] = pattern_.find(fi, fj);
      }
    }
}

Vec3 Discretization::grad_lambda(std::size_t c, int i) const {
  const double* g = grad_lambda_.data() + 16 * c + 4 * i;
  return {g[0], g[1], g[2]};
}

EnergyModel::EnergyModel(std::shared_ptr<const ExteriorMesh> mesh, ForcePotential force, GasLaw law,
                         double theta, ParallelOptions parallel)
    : disc_(std::make_shared<Discretization>(std::move(mesh), force)),
      force_(std::move(force)),
      cutoff_(std::move(law), disc_->psi_range(), theta),
      parallel_(parallel) {
  local_.reserve(disc_->num_cells());
  for (std::size_t c = 0; c < disc_->num_cells(); ++c) {
    if (c > 0 && disc_->psi(c) == disc_->psi(c - 1))
      local_.push_back(local_.back());
    else
      local_.push_back(cutoff_.local(disc_->psi(c)));
  }
}

FlowState EnergyModel::uniform_state(double q_infinity) const {
  FlowState s;
  s.q_infinity = q_infinity;
  s.theta = theta();
  s.phi.resize(disc_->num_vertices());
  for (std::size_t v = 0; v < s.phi.size(); ++v) s.phi[v] = q_infinity * mesh().vertices()[v][0];
  return s;
}

void EnergyModel::apply_dirichlet(FlowState& s) const {
  s.phi.resize(disc_->num_vertices(), 0.0);
  for (std::size_t v = 0; v < s.phi.size(); ++v)
    if (disc_->free_index(v) < 0) s.phi[v] = s.q_infinity * mesh().vertices()[v][0];
}

void EnergyModel::check_state(const FlowState& s) const {
  if (s.phi.size() != disc_->num_vertices())
    throw ValidationError("state has " + std::to_string(s.phi.size()) + " values for " +
                          std::to_string(disc_->num_vertices()) + " vertices");
  for (std::size_t v = 0; v < s.phi.size(); ++v)
    if (disc_->free_index(v) < 0 && s.phi[v] != s.q_infinity * mesh().vertices()[v][0])
      throw ValidationError("Dirichlet data violated at OUTER vertex " + std::to_string(v));
}

std::vector<double> EnergyModel::cell_gradients(const std::vector<double>& phi) const {
  std::vector<double> g(4 * disc_->num_cells());
  const auto geo = disc_->geometry();
  const auto& k = kernels::active();
  parallel_chunks(disc_->num_cells(), kChunk, resolve_threads(parallel_.threads),
                  [&](std::size_t, std::size_t b, std::size_t e) {
                    k.cell_gradients(geo, phi.data(), g.data(), b, e);
                  });
  return g;
}

Assembly EnergyModel::assemble(const FlowState& s, AssembleOrder order) const {
  check_state(s);
  const Discretization& d = *disc_;
  const std::size_t nc = d.num_cells();
  const int nloc = d.dim() + 1;
  const auto geo = d.geometry();
  const auto& kern = kernels::active();

  std::vector<double> g(4 * nc), rho(nc), rho_v(nc);
  const std::size_t chunks = (nc + kChunk - 1) / kChunk;
  std::vector<double> chunk_energy(chunks, 0.0);
  std::vector<int> chunk_active(chunks, 0);
  double energy_nd = 0.0;
  std::mutex nd_mutex;

  parallel_chunks(nc, kChunk, resolve_threads(parallel_.threads),
                  [&](std::size_t ch, std::size_t b, std::size_t e) {
                    kern.cell_gradients(geo, s.phi.data(), g.data(), b, e);
                    double en = 0.0;
                    int active = 0;
                    for (std::size_t c = b; c < e; ++c) {
                      const double* gc = g.data() + 4 * c;
                      const double v = gc[0] * gc[0] + gc[1] * gc[1] + gc[2] * gc[2];
                      const LocalCutoff& lc = local_[c];
                      en += d.volume(c) * lc.G(v);
                      if (v > lc.v1()) ++active;
                      if (order != AssembleOrder::Value) {
                        const auto r = lc.eval(v);
                        rho[c] = r.value;
                        rho_v[c] = r.dv;
                      }
                    }
                    chunk_energy[ch] = en;
                    chunk_active[ch] = active;
                    if (!parallel_.deterministic) {
                      std::lock_guard lock(nd_mutex);
                      energy_nd += en;
                    }
                  });

  Assembly out;
  if (parallel_.deterministic) {
    for (double en : chunk_energy) out.energy += en;
  } else {
    out.energy = energy_nd;
  }
  for (int a : chunk_active) out.cutoff_active_cells += a;
  if (order == AssembleOrder::Value) return out;

  out.gradient.assign(d.num_free(), 0.0);
  const bool hess = order == AssembleOrder::Hessian;
  if (hess) out.hessian = d.pattern();
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& cell = mesh().cells()[c];
    const Vec3 gc{g[4 * c], g[4 * c + 1], g[4 * c + 2]};
    std::array<Vec3, 4> gl;
    std::array<double, 4> gdot{};
    for (int i = 0; i < nloc; ++i) {
      gl[i] = d.grad_lambda(c, i);
      gdot[i] = dot(gc, gl[i]);
    }
    const double vol = d.volume(c);
    for (int i = 0; i < nloc; ++i) {
      const Index fi = d.free_index(cell[i]);
      if (fi >= 0) out.gradient[fi] += vol * rho[c] * gdot[i];
    }
    if (!hess) continue;
    for (int i = 0; i < nloc; ++i)
      for (int j = i; j < nloc; ++j) {
        const std::int64_t pij = d.position(c, i, j);
        if (pij < 0) continue;
        const double kij = vol * (rho[c] * dot(gl[i], gl[j]) + 2.0 * rho_v[c] * gdot[i] * gdot[j]);
        out.hessian.val[pij] += kij;
        if (j != i) out.hessian.val[d.position(c, j, i)] += kij;
      }
  }
  return out;
}

CellFields EnergyModel::fields(const FlowState& s) const {
  const std::size_t nc = disc_->num_cells();
  const auto g = cell_gradients(s.phi);
  CellFields f;
  f.velocity.resize(nc);
  f.speed_sq.resize(nc);
  f.rho_tilde.resize(nc);
  f.mach_ratio.resize(nc);
  f.cutoff_active.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    f.velocity[c] = {g[4 * c], g[4 * c + 1], g[4 * c + 2]};
    f.speed_sq[c] = dot(f.velocity[c], f.velocity[c]);
    const auto r = local_[c].eval(f.speed_sq[c]);
    f.rho_tilde[c] = r.value;
    f.mach_ratio[c] = std::sqrt(f.speed_sq[c]) / local_[c].critical_speed();
    f.cutoff_active[c] = f.speed_sq[c] > local_[c].v1();
  }
  return f;
}

void summarize(const EnergyModel& model, const FlowState& state, SolveReport& report) {
  const auto f = model.fields(state);
  report.max_speed = 0.0;
  report.max_mach_ratio = 0.0;
  report.cutoff_active_cells = 0;
  for (std::size_t c = 0; c < f.speed_sq.size(); ++c) {
    report.max_speed = std::max(report.max_speed, std::sqrt(f.speed_sq[c]));
    report.max_mach_ratio = std::max(report.max_mach_ratio, f.mach_ratio[c]);
    report.cutoff_active_cells += f.cutoff_active[c];
  }
  report.energy = model.assemble(state, AssembleOrder::Value).energy;
  report.flow_functional = flow_functional(model, state);
}

SolveReport newton_solve(const EnergyModel& model, FlowState& state, const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw ValidationError("solver tolerance must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const auto& kern = kernels::active();
  const Discretization& d = model.disc();
  const std::size_t nf = d.num_free();
  model.check_state(state);

  SolveReport rep;
  Assembly a = model.assemble(state, AssembleOrder::Hessian);
  double gnorm = norm2(a.gradient);
  rep.history.push_back({0, a.energy, gnorm, 0.0, 0, false});

  std::vector<double> dir(nf), rhs(nf);
  FlowState trial = state;
  int it = 0;
  while (gnorm >= opts.tol) {
    if (it >= opts.max_iter) break;
    ++it;
    for (std::size_t i = 0; i < nf; ++i) rhs[i] = -a.gradient[i];
    std::fill(dir.begin(), dir.end(), 0.0);
    const CgResult cg =
        pcg(a.hessian, rhs, dir, opts.cg_rel_tol, opts.cg_max_factor * static_cast<int>(nf));
    rep.cg_iterations += cg.iterations;
    double slope = kern.dot(a.gradient.data(), dir.data(), nf);
    if (!(slope < 0.0)) {
      dir = rhs;
      slope = -gnorm * gnorm;
    }

    const double slack = 1e-13 * std::max(1.0, std::abs(a.energy));
    double alpha = 1.0;
    bool accepted = false, roundoff = false;
    Assembly next;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt, alpha *= opts.backtrack) {
      trial.phi = state.phi;
      for (std::size_t i = 0; i < nf; ++i) trial.phi[d.free_vertices()[i]] += alpha * dir[i];
      Assembly val = model.assemble(trial, AssembleOrder::Value);
      if (val.energy <= a.energy + opts.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      if (val.energy - a.energy <= slack) {
        const Assembly gtrial = model.assemble(trial, AssembleOrder::Gradient);
        if (norm2(gtrial.gradient) < gnorm) {
          accepted = roundoff = true;
          break;
        }
      }
    }
    if (!accepted) {
      rep.iterations = it;
      rep.gradient_norm = gnorm;
      rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      summarize(model, state, rep);
      throw NonConvergenceError("line search failed at Newton iteration " + std::to_string(it), rep);
    }
    state.phi.swap(trial.phi);
    a = model.assemble(state, AssembleOrder::Hessian);
    gnorm = norm2(a.gradient);
    rep.history.push_back({it, a.energy, gnorm, alpha, cg.iterations, roundoff});
  }
  rep.iterations = it;
  rep.gradient_norm = gnorm;
  rep.converged = gnorm < opts.tol;
  summarize(model, state, rep);
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!rep.converged) {
    std::ostringstream msg;
    msg << "Newton did not converge in " << opts.max_iter << " iterations (gradient norm "
        << gnorm << ")";
    throw NonConvergenceError(msg.str(), rep);
  }
  return rep;
}

double flow_functional(const EnergyModel& model, const FlowState& state) {
  model.check_state(state);
  const Discretization& d = model.disc();
  const ExteriorMesh& m = model.mesh();
  const double q = state.q_infinity;
  const auto g = model.cell_gradients(state.phi);
  std::vector<double> phibar(state.phi.size());
  for (std::size_t v = 0; v < phibar.size(); ++v) phibar[v] = state.phi[v] - q * m.vertices()[v][0];

  const int nloc = m.dim() + 1;
  double sum = 0.0;
  for (std::size_t c = 0; c < d.num_cells(); ++c) {
    const double v = g[4 * c] * g[4 * c] + g[4 * c + 1] * g[4 * c + 1] + g[4 * c + 2] * g[4 * c + 2];
    const EnergyDensity inf = model.cutoff().G(q * q, d.psi(c));
    double pb = 0.0;
    for (int i = 0; i < nloc; ++i) pb += phibar[m.cells()[c][i]];
    pb /= nloc;
    sum += d.volume(c) * (model.local(c).G(v) - inf.G - 2.0 * inf.G_v * q * (g[4 * c] - q));
    sum -= d.volume(c) * 2.0 * inf.G_vw * q * d.grad_psi(c)[0] * pb;
  }
  const auto normals = boundary_normals(m);
  for (std::size_t f = 0; f < m.boundary().size(); ++f) {
    const auto& bf = m.boundary()[f];
    if (bf.tag != BoundaryTag::Obstacle) continue;
    const auto fv = m.face_vertices(bf);
    double pb = 0.0;
    for (Index v : fv) pb += phibar[v];
    pb /= static_cast<double>(fv.size());
    const EnergyDensity inf = model.cutoff().G(q * q, d.psi(m.boundary_cell(f)));
    sum += m.face_measure(fv) * 2.0 * inf.G_v * q * pb * normals[f][0];
  }
  return sum;
}

ResidualReport el_residual(const EnergyModel& model, const FlowState& state) {
  ResidualReport rep;
  rep.weak_norm = norm2(model.assemble(state, AssembleOrder::Gradient).gradient);
  const ExteriorMesh& m = model.mesh();
  const auto f = model.fields(state);
  std::vector<double> eta2(m.num_cells(), 0.0);
  auto flux = [&](std::size_t c) { return f.rho_tilde[c] * f.velocity[c]; };
  for (const auto& face : m.interior_faces()) {
    const std::span<const Index> fv(face.v.data(), static_cast<std::size_t>(m.dim()));
    const Vec3 n = unit_face_normal(m, fv);
    const double jump = dot(flux(face.left) - flux(face.right), n);
    const double w = face_diameter(m, fv) * m.face_measure(fv) * jump * jump;
    eta2[face.left] += 0.5 * w;
    eta2[face.right] += 0.5 * w;
  }
  for (std::size_t b = 0; b < m.boundary().size(); ++b) {
    const auto& bf = m.boundary()[b];
    if (bf.tag != BoundaryTag::Obstacle) continue;
    const auto fv = m.face_vertices(bf);
    const Index c = m.boundary_cell(b);
    const double jn = dot(flux(c), unit_face_normal(m, fv));
    eta2[c] += face_diameter(m, fv) * m.face_measure(fv) * jn * jn;
  }
  rep.cell_indicator.resize(eta2.size());
  double total = 0.0;
  for (std::size_t c = 0; c < eta2.size(); ++c) {
    rep.cell_indicator[c] = std::sqrt(eta2[c]);
    total += eta2[c];
  }
  rep.total = std::sqrt(total);
  return rep;
}

BoundaryFlux mass_flux_check(const EnergyModel& model, const FlowState& state) {
  const ExteriorMesh& m = model.mesh();
  const auto f = model.fields(state);
  const auto normals = boundary_normals(m);
  BoundaryFlux out{0.0, 0.0};
  for (std::size_t b = 0; b < m.boundary().size(); ++b) {
    const auto& bf = m.boundary()[b];
    const Index c = m.boundary_cell(b);
    const double fl = m.face_measure(m.face_vertices(bf)) * f.rho_tilde[c] * dot(f.velocity[c], normals[b]);
    (bf.tag == BoundaryTag::Obstacle ? out.obstacle : out.outer) += fl;
  }
  return out;
}

double gradient_l2_distance(const EnergyModel& model, const std::vector<double>& a,
                            const std::vector<double>& b) {
  const auto ga = model.cell_gradients(a), gb = model.cell_gradients(b);
  double s = 0.0;
  for (std::size_t c = 0; c < model.disc().num_cells(); ++c) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) d2 += (ga[4 * c + k] - gb[4 * c + k]) * (ga[4 * c + k] - gb[4 * c + k]);
    s += model.disc().volume(c) * d2;
  }
  return std::sqrt(s);
}

std::string history_csv(const SolveReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "iteration,energy,gradient_norm,step_length\n";
  for (const auto& h : report.history)
    out << h.iteration << ',' << h.energy << ',' << h.gradient_norm << ',' << h.step_length << '\n';
  return out.str();
}

}  // namespace potflow

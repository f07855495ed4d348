#include "potflow/gas_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "potflow/errors.hpp"

namespace potflow {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// int_0^S p'(x0 + s) / (x0 + s) ds for p'(x0 + s) = a + b s + c s^2.
double segment_h_integral(double x0, double a, double b, double c, double S) {
  const double r = a - b * x0 + c * x0 * x0;
  return 0.5 * c * S * S + (b - c * x0) * S + r * std::log1p(S / x0);
}

}  // namespace

GasLaw::GasLaw(Kind kind, double rho_floor)
    : kind_(std::move(kind)), rho_floor_(rho_floor) {
  if (!(rho_floor_ > 0.0)) throw LawError("rho_floor must be positive");
  std::visit(
      Overloaded{
          [](const GammaLaw& g) {
            if (!(g.kappa > 0.0)) throw LawError("kappa must be positive");
            if (!(g.gamma > 1.0)) throw LawError("gamma must exceed 1");
          },
          [](const Isothermal& g) {
            if (!(g.kappa > 0.0)) throw LawError("kappa must be positive");
          },
          [this](const Tabulated& t) {
            if (t.samples.size() < 3)
              throw LawError("pressure table needs at least three samples");
            std::vector<double> x, y;
            for (auto [rho, p] : t.samples) {
              if (!(rho > 0.0)) throw LawError("table densities must be positive");
              x.push_back(rho);
              y.push_back(p);
            }
            for (std::size_t k = 0; k + 1 < x.size(); ++k) {
              if (!(x[k + 1] > x[k]))
                throw LawError("table densities must be strictly increasing");
              if (!(y[k + 1] > y[k]))
                throw LawError("table pressures must be strictly increasing");
            }
            if (x.front() > 1.0 || x.back() < 1.0)
              throw LawError("pressure table must bracket the reference density 1");
            table_ = MonotoneCubic(x, y);
            rho_floor_ = std::max(rho_floor_, x.front());
            rho_max_ = x.back();
            table_h_.assign(x.size(), 0.0);
            for (std::size_t k = 0; k + 1 < x.size(); ++k) {
              const auto s = table_.segment(k);
              table_h_[k + 1] = table_h_[k] + segment_h_integral(s.x0, s.c1, 2.0 * s.c2,
                                                                 3.0 * s.c3, s.x1 - s.x0);
            }
            const double h_at_one = tab_h(1.0);
            for (double& v : table_h_) v -= h_at_one;
          }},
      kind_);
  verify_law();
}

GasLaw GasLaw::gamma_law(double kappa, double gamma, double rho_floor) {
  return GasLaw(GammaLaw{kappa, gamma}, rho_floor);
}

GasLaw GasLaw::isothermal(double kappa, double rho_floor) {
  return GasLaw(Isothermal{kappa}, rho_floor);
}

GasLaw GasLaw::load_table(const std::filesystem::path& path, double rho_floor) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pressure table " + path.string());
  Tabulated t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double rho, p;
    if (!(ls >> rho)) continue;
    if (!(ls >> p)) throw ParseError(lineno, "expected two columns 'rho pressure'");
    std::string extra;
    if (ls >> extra) throw ParseError(lineno, "unexpected trailing token '" + extra + "'");
    t.samples.emplace_back(rho, p);
  }
  return GasLaw(std::move(t), rho_floor);
}

void GasLaw::verify_law() const {
  const double lo = rho_floor_;
  const double hi = std::isfinite(rho_max_) ? rho_max_ : 1e4;
  constexpr int kSamples = 1000;
  const bool log_spacing = !std::holds_alternative<Tabulated>(kind_);
  for (int i = 0; i < kSamples; ++i) {
    const double t = static_cast<double>(i) / (kSamples - 1);
    const double rho =
        log_spacing ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                    : lo + t * (hi - lo);
    const auto pe = pressure(std::clamp(rho, lo, hi));
    if (!(pe.dp > 0.0))
      throw LawError("p'(rho) <= 0 at rho = " + std::to_string(rho));
    if (!(2.0 * pe.dp + rho * pe.ddp > 0.0))
      throw LawError("2p' + rho p'' <= 0 at rho = " + std::to_string(rho));
  }
}

void GasLaw::check_density(double rho) const {
  if (!(rho >= rho_floor_))
    throw DomainError("density " + std::to_string(rho) + " below rho_floor");
  if (rho > rho_max_)
    throw DomainError("density " + std::to_string(rho) + " above table range");
}

PressureEval GasLaw::pressure(double rho) const {
  check_density(rho);
  return std::visit(
      Overloaded{[rho](const GammaLaw& g) {
                   const double a = g.kappa * std::pow(rho, g.gamma - 2.0);
                   return PressureEval{a * rho * rho, g.gamma * a * rho,
                                       g.gamma * (g.gamma - 1.0) * a};
                 },
                 [rho](const Isothermal& g) {
                   return PressureEval{g.kappa * rho, g.kappa, 0.0};
                 },
                 [this, rho](const Tabulated&) {
                   const auto e = table_.eval(rho);
                   return PressureEval{e.value, e.d1, e.d2};
                 }},
      kind_);
}

double GasLaw::tab_h(double rho) const {
  const std::size_t k = table_.locate(rho);
  const auto s = table_.segment(k);
  return table_h_[k] +
         segment_h_integral(s.x0, s.c1, 2.0 * s.c2, 3.0 * s.c3, rho - s.x0);
}

double GasLaw::h(double rho) const {
  check_density(rho);
  return std::visit(
      Overloaded{[rho](const GammaLaw& g) {
                   return g.kappa * g.gamma / (g.gamma - 1.0) *
                          std::expm1((g.gamma - 1.0) * std::log(rho));
                 },
                 [rho](const Isothermal& g) { return g.kappa * std::log(rho); },
                 [this, rho](const Tabulated&) { return tab_h(rho); }},
      kind_);
}

double GasLaw::H(double rho) const { return 0.5 * pressure(rho).dp + h(rho); }

double GasLaw::sound_speed(double rho) const { return std::sqrt(pressure(rho).dp); }

double GasLaw::invert_monotone(double target, bool use_H) const {
  auto f = [&](double rho) { return use_H ? H(rho) : h(rho); };
  auto df = [&](double rho) {
    const auto pe = pressure(rho);
    return use_H ? 0.5 * pe.ddp + pe.dp / rho : pe.dp / rho;
  };
  double lo = rho_floor_;
  double hi = rho_max_;
  const double tol = 1e-12 * (1.0 + std::abs(target));
  // Bracketing bisection to width 1e-6, then safeguarded Newton.
  while (hi - lo > 1e-6 * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  double rho = 0.5 * (lo + hi);
  for (int it = 0; it < 60; ++it) {
    const double r = f(rho) - target;
    if (std::abs(r) < tol) break;
    (r < 0.0 ? lo : hi) = rho;
    double next = rho - r / df(rho);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    rho = next;
  }
  return rho;
}

double GasLaw::h_inv(double y) const {
  if (y < h(rho_floor_))
    throw RangeError("h^{-1}(" + std::to_string(y) + "): below h(rho_floor), vacuum approach");
  if (std::isfinite(rho_max_) && y > h(rho_max_))
    throw RangeError("h^{-1}(" + std::to_string(y) + "): above h(rho_max)");
  return std::visit(
      Overloaded{[y](const GammaLaw& g) {
                   const double x = (g.gamma - 1.0) * y / (g.kappa * g.gamma);
                   return std::exp(std::log1p(x) / (g.gamma - 1.0));
                 },
                 [y](const Isothermal& g) { return std::exp(y / g.kappa); },
                 [this, y](const Tabulated&) { return invert_monotone(y, false); }},
      kind_);
}

double GasLaw::H_lower_limit() const {
  return std::visit(
      Overloaded{[](const GammaLaw& g) { return -g.kappa * g.gamma / (g.gamma - 1.0); },
                 [](const Isothermal&) { return -kInf; },
                 [this](const Tabulated&) { return H(rho_floor_); }},
      kind_);
}

double GasLaw::h_upper_limit() const {
  if (std::holds_alternative<Tabulated>(kind_)) return h(rho_max_);
  return kInf;
}

double GasLaw::H_inv(double psi) const {
  if (!(psi > H_lower_limit()) || psi < H(rho_floor_))
    throw AdmissibilityError(AdmissibilityError::Side::Lower,
                             "psi = " + std::to_string(psi) +
                                 " is not above lim_{rho->0+} H(rho)");
  if (!(psi < h_upper_limit()))
    throw AdmissibilityError(AdmissibilityError::Side::Upper,
                             "psi = " + std::to_string(psi) +
                                 " is not below lim_{rho->inf} h(rho)");
  return std::visit(
      Overloaded{[psi](const GammaLaw& g) {
                   const double c = g.kappa * g.gamma / (g.gamma - 1.0);
                   const double x = (psi + c) / (c * 0.5 * (g.gamma + 1.0));
                   return std::pow(x, 1.0 / (g.gamma - 1.0));
                 },
                 [psi](const Isothermal& g) { return std::exp(psi / g.kappa - 0.5); },
                 [this, psi](const Tabulated&) { return invert_monotone(psi, true); }},
      kind_);
}

double GasLaw::critical_speed(double psi) const {
  const double rho_star = H_inv(psi);
  const double q_sq = 2.0 * (psi - h(rho_star));
  const double q = std::sqrt(std::max(q_sq, 0.0));
  const double c = sound_speed(rho_star);
  if (std::abs(q / c - 1.0) > 1e-8)
    throw LawError("sonic state at H^{-1}(psi) does not have Mach 1");
  return q;
}

BernoulliState GasLaw::bernoulli_density(double speed_sq, double psi) const {
  if (speed_sq < 0.0) throw DomainError("negative speed squared");
  const double rho = h_inv(psi - 0.5 * speed_sq);
  return {speed_sq, psi, rho, std::sqrt(speed_sq) / sound_speed(rho)};
}

AdmissibleBand GasLaw::check_admissible(double psi_min, double psi_max) const {
  if (psi_min > psi_max) throw DomainError("psi_min exceeds psi_max");
  AdmissibleBand band{H_lower_limit(), h_upper_limit(), 0.0, 0.0};
  band.lower_margin = psi_min - band.lower;
  band.upper_margin = band.upper - psi_max;
  if (!(band.lower_margin > 0.0))
    throw AdmissibilityError(AdmissibilityError::Side::Lower,
                             "lower: psi_min = " + std::to_string(psi_min) +
                                 " <= lim_{rho->0+} H = " + std::to_string(band.lower));
  if (!(band.upper_margin > 0.0))
    throw AdmissibilityError(AdmissibilityError::Side::Upper,
                             "upper: psi_max = " + std::to_string(psi_max) +
                                 " >= lim_{rho->inf} h = " + std::to_string(band.upper));
  return band;
}

}  // namespace potflow

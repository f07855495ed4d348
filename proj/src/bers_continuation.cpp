#include "potflow/bers_continuation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace potflow {

EnergyModel make_model(const ProblemData& data, double theta) {
  if (!(theta > 0.0 && theta < 0.5)) throw ScheduleError("theta must lie in (0, 1/2)");
  return EnergyModel(data.mesh, data.force, data.law, theta, data.parallel);
}

MachRatio max_mach_ratio(const EnergyModel& model, const FlowState& state) {
  const auto g = model.cell_gradients(state.phi);
  MachRatio best{0.0, 0, model.mesh().barycenter(0)};
  for (std::size_t c = 0; c < model.disc().num_cells(); ++c) {
    const double s = std::sqrt(g[4 * c] * g[4 * c] + g[4 * c + 1] * g[4 * c + 1] +
                               g[4 * c + 2] * g[4 * c + 2]);
    const double r = s / model.local(c).critical_speed();
    if (r > best.value) best = {r, c, model.mesh().barycenter(c)};
  }
  return best;
}

ContinuationRecord solve_certified(const EnergyModel& model, double q_infinity,
                                   const ProblemData& data, const FlowState* warm) {
  FlowState s;
  if (warm && warm->q_infinity > 0.0) {
    s = *warm;
    for (double& p : s.phi) p *= q_infinity / warm->q_infinity;
    s.q_infinity = q_infinity;
    s.theta = model.theta();
    model.apply_dirichlet(s);
  } else {
    s = model.uniform_state(q_infinity);
  }
  ContinuationRecord rec{};
  rec.q_infinity = q_infinity;
  rec.theta = model.theta();
  try {
    rec.report = newton_solve(model, s, data.solver);
  } catch (const NonConvergenceError&) {
    rec.report = newton_solve(model, s, data.near_sonic);
    rec.relaxed_tolerance = true;
  }
  const MachRatio m = max_mach_ratio(model, s);
  rec.max_mach_ratio = m.value;
  rec.argmax = m.location;
  rec.certified_subsonic = m.value < 1.0 - 2.0 * model.theta();
  rec.state = std::move(s);
  return rec;
}

SweepResult sweep(const std::vector<double>& q_list, double theta, const ProblemData& data) {
  for (std::size_t i = 1; i < q_list.size(); ++i)
    if (!(q_list[i] > q_list[i - 1])) throw ValidationError("sweep speeds must be increasing");
  const EnergyModel model = make_model(data, theta);
  SweepResult out;
  const FlowState* warm = nullptr;
  for (double q : q_list) {
    try {
      out.records.push_back(solve_certified(model, q, data, warm));
      warm = &out.records.back().state;
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "sweep stopped at q_infinity = " << q << ": " << e.what();
      out.error = msg.str();
      break;
    }
  }
  return out;
}

std::vector<double> default_theta_schedule() { return {0.1, 0.05, 0.025, 0.0125}; }

CriticalResult critical_qhat(const std::vector<double>& schedule, const ProblemData& data,
                             const CriticalOptions& opts) {
  if (schedule.empty()) throw ScheduleError("empty theta schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0 && schedule[i] < 0.5))
      throw ScheduleError("theta " + std::to_string(schedule[i]) + " outside (0, 1/2)");
    if (i > 0 && !(schedule[i] < schedule[i - 1]))
      throw ScheduleError("theta schedule must be strictly decreasing");
  }
  const double upper0 = opts.upper_override > 0.0
                            ? opts.upper_override
                            : opts.upper_factor * data.law.sound_speed(1.0);

  CriticalResult res{0.0, {}, true, true};
  double lower = 0.0;
  std::optional<FlowState> lower_state;
  double last_argmax_qcr = 0.0;

  for (double theta : schedule) {
    const EnergyModel model = make_model(data, theta);
    ThetaStage st{theta, lower, false, 0.0, {}, {}};
    if (last_argmax_qcr == 0.0) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < model.disc().num_cells(); ++c)
        m = std::min(m, model.local(c).critical_speed());
      last_argmax_qcr = m;
    }
    auto tol = [&] { return opts.tol_q > 0.0 ? opts.tol_q : 1e-3 * last_argmax_qcr; };
    auto note_certified = [&](const ContinuationRecord& r) {
      if (r.q_infinity > 0.0) last_argmax_qcr = data.law.critical_speed(data.force.psi(r.argmax));
    };

    // The previous stage's speed stays certified at smaller theta; confirm it.
    if (lower > 0.0) {
      auto r = solve_certified(model, lower, data, lower_state ? &*lower_state : nullptr);
      if (!r.certified_subsonic) res.bracket_invariant = false;
      lower_state = r.state;
      st.records.push_back(std::move(r));
    }

    double upper = upper0;
    {
      auto r = solve_certified(model, upper, data, lower_state ? &*lower_state : nullptr);
      const bool cert = r.certified_subsonic;
      if (cert) note_certified(r);
      st.records.push_back(std::move(r));
      if (cert) {
        st.capped = true;
        st.q_certified = upper;
        lower = upper;
        lower_state = st.records.back().state;
      }
    }
    if (!st.capped) {
      st.brackets.push_back({lower, upper});
      int steps = 0;
      while (upper - lower >= tol() && steps++ < opts.max_bisections) {
        const double mid = 0.5 * (lower + upper);
        auto r = solve_certified(model, mid, data, lower_state ? &*lower_state : nullptr);
        if (r.certified_subsonic) {
          lower = mid;
          lower_state = r.state;
          note_certified(r);
        } else {
          upper = mid;
        }
        st.records.push_back(std::move(r));
        const double prev_width = st.brackets.back().upper - st.brackets.back().lower;
        st.brackets.push_back({lower, upper});
        if (std::abs((upper - lower) - 0.5 * prev_width) > 1e-12 * prev_width)
          res.bracket_invariant = false;
      }
      st.q_certified = lower;
    }
    st.tol_q = tol();
    if (!res.stages.empty() && st.q_certified < res.stages.back().q_certified)
      res.nondecreasing = false;
    res.stages.push_back(std::move(st));
  }
  res.q_hat = res.stages.back().q_certified;
  return res;
}

ContinuityProbe continuity_probe(double q, const std::vector<double>& deltas, double theta,
                                 const ProblemData& data) {
  const EnergyModel model = make_model(data, theta);
  ContinuityProbe p{q, 0.0, deltas, {}};
  const auto base = solve_certified(model, q, data);
  p.base_ratio = base.max_mach_ratio;
  for (double d : deltas) {
    const auto r = solve_certified(model, q + d, data, &base.state);
    p.differences.push_back(std::abs(r.max_mach_ratio - base.max_mach_ratio));
  }
  return p;
}

std::string continuation_csv(const std::vector<ContinuationRecord>& records) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "theta,q_infinity,max_mach_ratio,certified,iterations,energy\n";
  for (const auto& r : records)
    out << r.theta << ',' << r.q_infinity << ',' << r.max_mach_ratio << ','
        << (r.certified_subsonic ? 1 : 0) << ',' << r.report.iterations << ',' << r.report.energy
        << '\n';
  return out.str();
}

}  // namespace potflow

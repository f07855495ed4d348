#include "potflow/cli.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "potflow/config.hpp"
#include "potflow/field_export.hpp"
#include "potflow/sonic_limit.hpp"
#include "potflow/verify.hpp"

namespace potflow::cli {
namespace {

namespace fs = std::filesystem;

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

struct Context {
  RunConfig config;
  fs::path out_dir;
  std::ostream& out;
};

void export_configured(const Context& ctx, const EnergyModel& model, const FlowState& s,
                       const std::string& stem) {
  const auto& fmt = ctx.config.output.format;
  if (fmt == "vtk" || fmt == "both") {
    export_fields(model, s, FieldFormat::Vtk, ctx.out_dir / (stem + ".vtk"));
    ctx.out << "wrote " << (ctx.out_dir / (stem + ".vtk")).string() << '\n';
  }
  if (fmt == "csv" || fmt == "both") {
    export_fields(model, s, FieldFormat::Csv, ctx.out_dir / (stem + ".csv"));
    ctx.out << "wrote " << (ctx.out_dir / (stem + ".csv")).string() << '\n';
  }
}

std::string law_name(const GasLaw& law) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (auto* g = std::get_if<GammaLaw>(&law.kind()))
    os << "gamma law p = kappa rho^gamma, kappa=" << g->kappa << " gamma=" << g->gamma;
  else if (auto* i = std::get_if<Isothermal>(&law.kind()))
    os << "isothermal p = kappa rho, kappa=" << i->kappa;
  else
    os << "tabulated, " << std::get<Tabulated>(law.kind()).samples.size() << " samples";
  return os.str();
}

int cmd_check_gas(const Context& ctx) {
  const GasLaw law = build_gas(ctx.config);
  PsiRange r;
  if (ctx.config.check_psi_range) {
    r = {(*ctx.config.check_psi_range)[0], (*ctx.config.check_psi_range)[1]};
  } else {
    auto mesh = build_mesh(ctx.config);
    r = psi_range(build_force(ctx.config, *mesh), *mesh);
  }
  std::ostringstream rep;
  rep << "law: " << law_name(law) << '\n';
  rep << "band: (" << num(law.H_lower_limit()) << ", " << num(law.h_upper_limit()) << ")\n";
  rep << "psi range: [" << num(r.min) << ", " << num(r.max) << "]\n";
  int code = kSuccess;
  try {
    const AdmissibleBand b = law.check_admissible(r.min, r.max);
    rep << "margins: lower " << num(b.lower_margin) << ", upper " << num(b.upper_margin) << '\n';
    rep << "q_cr(" << num(r.min) << ") = " << num(law.critical_speed(r.min)) << '\n';
    rep << "q_cr(" << num(r.max) << ") = " << num(law.critical_speed(r.max)) << '\n';
    rep << "c(1) = " << num(law.sound_speed(1.0)) << '\n';
    rep << "admissible: yes\n";
  } catch (const AdmissibilityError& e) {
    rep << "admissible: no (" << e.what() << ")\n";
    code = kUsageError;
  }
  ctx.out << rep.str();
  write_text(ctx.out_dir / "check_gas.txt", rep.str());
  return code;
}

nlohmann::json report_json(const ContinuationRecord& rec) {
  const auto& r = rec.report;
  return {{"q_infinity", rec.q_infinity},
          {"theta", rec.theta},
          {"converged", r.converged},
          {"relaxed_tolerance", rec.relaxed_tolerance},
          {"iterations", r.iterations},
          {"gradient_norm", r.gradient_norm},
          {"energy", r.energy},
          {"flow_functional", r.flow_functional},
          {"max_speed", r.max_speed},
          {"max_mach_ratio", rec.max_mach_ratio},
          {"argmax", rec.argmax},
          {"certified_subsonic", rec.certified_subsonic},
          {"cutoff_active_cells", r.cutoff_active_cells},
          {"cg_iterations", r.cg_iterations}};
}

int cmd_solve(const Context& ctx, bool with_reports) {
  const ProblemData data = build_problem(ctx.config);
  const EnergyModel model = make_model(data, ctx.config.cutoff.theta);
  const auto t0 = std::chrono::steady_clock::now();
  const ContinuationRecord rec = solve_certified(model, ctx.config.q_infinity, data);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (with_reports) {
    write_text(ctx.out_dir / "report.json", report_json(rec).dump(2) + "\n");
    write_text(ctx.out_dir / "history.csv", history_csv(rec.report));
    ctx.out << "q_infinity " << num(rec.q_infinity) << " theta " << num(rec.theta) << '\n'
            << "newton iterations " << rec.report.iterations << ", gradient norm "
            << num(rec.report.gradient_norm) << '\n'
            << "energy " << num(rec.report.energy) << '\n'
            << "max mach ratio " << num(rec.max_mach_ratio)
            << (rec.certified_subsonic ? " (certified subsonic)" : " (not certified)") << '\n'
            << "cut-off active cells " << rec.report.cutoff_active_cells << '\n'
            << "wall time " << wall << " s\n";
  }
  export_configured(ctx, model, rec.state, "fields");
  return kSuccess;
}

int cmd_sweep(const Context& ctx) {
  const ProblemData data = build_problem(ctx.config);
  const SweepResult res = sweep(ctx.config.continuation.q_list, ctx.config.cutoff.theta, data);
  write_text(ctx.out_dir / "sweep.csv", continuation_csv(res.records));
  for (const auto& r : res.records)
    ctx.out << "q " << num(r.q_infinity) << "  mach ratio " << num(r.max_mach_ratio)
            << (r.certified_subsonic ? "  certified" : "") << '\n';
  if (res.error) {
    ctx.out << "sweep stopped: " << *res.error << '\n';
    return kNumericalFailure;
  }
  return kSuccess;
}

CriticalResult run_critical(const Context& ctx, const ProblemData& data) {
  CriticalOptions opts;
  opts.tol_q = ctx.config.continuation.tol_q;
  opts.upper_factor = ctx.config.continuation.upper_factor;
  opts.upper_override = ctx.config.continuation.upper_override;
  return critical_qhat(ctx.config.cutoff.schedule, data, opts);
}

int cmd_critical(const Context& ctx) {
  const ProblemData data = build_problem(ctx.config);
  const CriticalResult res = run_critical(ctx, data);
  std::vector<ContinuationRecord> all;
  std::ostringstream stages, brackets;
  stages << std::setprecision(17) << "theta,q_certified,capped,tol_q,bisections\n";
  brackets << std::setprecision(17) << "theta,step,lower,upper\n";
  for (const auto& st : res.stages) {
    all.insert(all.end(), st.records.begin(), st.records.end());
    stages << st.theta << ',' << st.q_certified << ',' << (st.capped ? 1 : 0) << ','
           << st.tol_q << ',' << st.brackets.size() << '\n';
    for (std::size_t i = 0; i < st.brackets.size(); ++i)
      brackets << st.theta << ',' << i << ',' << st.brackets[i].lower << ','
               << st.brackets[i].upper << '\n';
    ctx.out << "theta " << num(st.theta) << "  q_certified " << num(st.q_certified)
            << (st.capped ? "  (capped at bracket upper end)" : "") << '\n';
  }
  write_text(ctx.out_dir / "critical.csv", continuation_csv(all));
  write_text(ctx.out_dir / "stages.csv", stages.str());
  write_text(ctx.out_dir / "brackets.csv", brackets.str());
  ctx.out << "q_hat estimate " << num(res.q_hat)
          << " (depends on the mesh and truncation radius)\n"
          << "nondecreasing " << (res.nondecreasing ? "yes" : "no") << ", bracket invariant "
          << (res.bracket_invariant ? "yes" : "no") << '\n';
  return res.nondecreasing && res.bracket_invariant ? kSuccess : kNumericalFailure;
}

int cmd_limit(const Context& ctx) {
  const ProblemData data = build_problem(ctx.config);
  double q_hat = ctx.config.continuation.q_hat;
  if (q_hat <= 0) {
    q_hat = run_critical(ctx, data).q_hat;
    ctx.out << "q_hat from critical search " << num(q_hat) << '\n';
  }
  const double theta = ctx.config.cutoff.schedule.empty() ? ctx.config.cutoff.theta
                                                          : ctx.config.cutoff.schedule.back();
  const EnergyModel model = make_model(data, theta);
  const LimitSequence seq = build_sequence(model, q_hat, ctx.config.continuation.limit_steps, data);
  const auto table = cauchy_table(model, seq);
  std::ostringstream cs;
  cs << std::setprecision(17) << "i,j,distance\n";
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table[i].size(); ++j) cs << i << ',' << j << ',' << table[i][j] << '\n';
  write_text(ctx.out_dir / "cauchy.csv", cs.str());
  const TestSet tests = make_test_set(model.mesh(), seq.subset);
  const auto diag = diagnose(model, seq, tests);
  write_text(ctx.out_dir / "limit_diagnostics.csv", diagnostics_csv(diag));
  write_text(ctx.out_dir / "limit_members.csv", continuation_csv(seq.members));
  for (const auto& d : diag)
    ctx.out << "q " << num(d.q_infinity) << "  max mach " << num(d.max_mach) << "  mass "
            << num(d.mass_residual) << "  momentum " << num(d.momentum_residual) << '\n';
  const DecayReport dr = decay_report(data.force, model.mesh(), ctx.config.decay.q_exp,
                                      ctx.config.decay.beta);
  std::ostringstream ds;
  ds << "d1psi_norm " << num(dr.d1psi_norm) << '\n'
     << "weighted_grad_norm " << num(dr.weighted_grad_norm) << '\n'
     << "fitted_exponent " << (dr.fitted_exponent ? num(*dr.fitted_exponent) : "none") << '\n'
     << "predicted_beta_prime " << num(dr.predicted_beta_prime) << '\n';
  write_text(ctx.out_dir / "force_decay.txt", ds.str());
  ctx.out << "force decay: predicted velocity exponent " << num(dr.predicted_beta_prime) << '\n';
  ctx.out << kLimitGapNote << '\n';
  return kSuccess;
}

int cmd_verify(const Context& ctx) {
  const ProblemData data = build_problem(ctx.config);
  const auto checks = verify_problem(data, ctx.config.cutoff.theta, ctx.config.q_infinity);
  std::ostringstream rep;
  bool ok = true;
  for (const auto& c : checks) {
    rep << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << num(c.value) << " (limit "
        << num(c.limit) << ")";
    if (!c.note.empty()) rep << " [" << c.note << "]";
    rep << '\n';
    ok = ok && c.passed;
  }
  ctx.out << rep.str();
  write_text(ctx.out_dir / "verify.txt", rep.str());
  return ok ? kSuccess : kNumericalFailure;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"check-gas", "solve",  "sweep", "critical",
                                              "limit",     "verify", "export"};
  return names;
}

int run(const std::string& subcommand, const fs::path& config_path, std::ostream& out,
        std::ostream& err, const Overrides& overrides) {
  try {
    RunConfig config = load_config(config_path);
    if (overrides.output_directory) config.output.directory = overrides.output_directory->string();
    if (overrides.threads) config.parallel.threads = *overrides.threads;
    validate(config);
    fs::path dir(config.output.directory);
    if (dir.is_relative()) dir = fs::current_path() / dir;
    Context ctx{config, dir, out};
    if (subcommand == "check-gas") return cmd_check_gas(ctx);
    if (subcommand == "solve") return cmd_solve(ctx, true);
    if (subcommand == "sweep") return cmd_sweep(ctx);
    if (subcommand == "critical") return cmd_critical(ctx);
    if (subcommand == "limit") return cmd_limit(ctx);
    if (subcommand == "verify") return cmd_verify(ctx);
    if (subcommand == "export") return cmd_solve(ctx, false);
    err << "unknown subcommand '" << subcommand << "'\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Steady compressible potential flow past an obstacle under a body force", "potflow"};
  app.require_subcommand(1);
  fs::path config;
  std::string output;
  int threads = -1;
  const std::vector<std::pair<std::string, std::string>> help{
      {"check-gas", "report the gas closure and the admissible band for psi"},
      {"solve", "solve the cut-off problem at q_infinity and export fields"},
      {"sweep", "warm-started solves over continuation.q_list"},
      {"critical", "estimate the critical free-stream speed over the theta schedule"},
      {"limit", "subsonic-sonic limit sequence and its diagnostics"},
      {"verify", "run the property suite on the configured problem"},
      {"export", "solve and write field files only"}};
  for (const auto& [name, desc] : help) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("config", config, "JSON run configuration")->required();
    sub->add_option("-o,--output", output, "output directory (overrides output.directory)");
    sub->add_option("-t,--threads", threads, "assembly threads (overrides parallel.threads)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kUsageError;
  }
  Overrides ov;
  if (!output.empty()) ov.output_directory = output;
  if (threads >= 0) ov.threads = threads;
  return run(app.get_subcommands().front()->get_name(), config, out, err, ov);
}

}  // namespace potflow::cli

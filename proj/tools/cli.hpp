#pragma once

// robvar command-line front end. cli_main is separate from main() so tests
// can drive it in-process.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error or malformed spec.
// Every failure prints one line to stderr:
//   robvar: error kind=<kind> exit=<code> message="<text>"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dgp_json.hpp"
#include "robvar/robvar.hpp"

namespace robvar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

inline void report_error(std::ostream& err, const std::string& kind, int code, const std::string& message) {
  err << "robvar: error kind=" << kind << " exit=" << code << " message=" << json(message).dump() << '\n';
}

inline std::string joined_command(const std::vector<std::string>& args) {
  std::string out = "robvar";
  for (const auto& a : args) out += " " + a;
  return out;
}

inline void write_provenance(const std::string& path, const std::string& command, const json& spec,
                             std::uint64_t seed, const std::vector<std::string>& outputs) {
  write_text(path, make_provenance(command, spec, seed, outputs).dump(2) + "\n");
}

inline std::string provenance_path(const std::string& flag, const std::string& output) {
  return flag.empty() ? output + ".provenance.json" : flag;
}

inline json model_to_dgp_json(const VarModel& model, double df) {
  json lags = json::array();
  for (const auto& b : model.coeffs()) lags.push_back(matrix_to_json(b));
  json noise = df > 0.0 ? json{{"kind", "student_t"}, {"df", df}} : json{{"kind", "gaussian"}, {"sd", 1.0}};
  return {{"variant", "var_t"}, {"lags", lags}, {"noise", noise}};
}

struct SimulateArgs {
  std::string dgp_path;
  std::string model_path;
  double df = 3.0;
  Index n = 0;
  Index burn_in = 500;
  std::uint64_t seed = 1;
  std::string output;
  std::string provenance;
};

struct FitArgs {
  std::string input;
  Index lag = 1;
  double tau = 1.0;
  double b = 3.0;
  std::string lambda_mode = "theory";
  double c = 1.0;
  std::optional<double> lambda;
  std::uint64_t seed = 1;
  double step = 0.9;
  double tol = 1e-4;
  long max_iter = 10000;
  std::string step_mode = "fixed";
  int workers = 0;
  std::string output;
  std::string provenance;
};

struct ExperimentArgs {
  std::string spec_path;
  std::string preset;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  int workers = 0;
};

struct DiagnoseArgs {
  std::string spec_path;
  std::string output;
  int workers = 0;
  std::string provenance;
};

struct StabilityArgs {
  std::string model_path;
  std::string output = "stability.json";
  std::string provenance;
};

inline int run_simulate(const SimulateArgs& a, const CLI::App& cmd, const std::string& command, std::ostream& out) {
  if (a.dgp_path.empty() == a.model_path.empty()) throw UsageError("simulate: give exactly one of --dgp or --model");
  json dgp_doc;
  Index n = a.n;
  Index burn_in = a.burn_in;
  std::uint64_t seed = a.seed;
  if (!a.dgp_path.empty()) {
    const json doc = read_json_file(a.dgp_path);
    if (doc.contains("provenance_version")) {
      const json& s = doc.at("spec");
      dgp_doc = s.at("dgp");
      if (cmd.count("--n") == 0) n = s.at("n").get<Index>();
      if (cmd.count("--burn-in") == 0) burn_in = s.at("burn_in").get<Index>();
      if (cmd.count("--seed") == 0) seed = s.at("seed").get<std::uint64_t>();
    } else {
      dgp_doc = doc;
    }
  } else {
    dgp_doc = model_to_dgp_json(read_var_model_csv(a.model_path), a.df);
  }
  if (n < 1) throw UsageError("simulate: --n is required and must be positive");
  if (burn_in < 0) throw UsageError("simulate: --burn-in must be >= 0");
  const DgpSpec dgp = dgp_from_json(dgp_doc);
  const TimeSeriesMatrix data = simulate(dgp, n, burn_in, seed);
  write_time_series_csv(data, a.output);
  const json spec{{"dgp", dgp_doc}, {"n", n}, {"burn_in", burn_in}, {"seed", seed},
                  {"variant", variant_name(dgp)}, {"stability_radius", stability_radius(dgp)}};
  write_provenance(provenance_path(a.provenance, a.output), command, spec, seed, {a.output});
  out << "simulate: " << variant_name(dgp) << " p=" << data.p() << " n=" << data.rows() << " -> " << a.output << '\n';
  return kExitOk;
}

inline int run_fit(const FitArgs& a, const std::string& command, std::ostream& out) {
  FitConfig fit;
  fit.robust = RobustConfig(a.tau, a.b);
  if (a.lambda_mode == "explicit") {
    if (!a.lambda) throw UsageError("fit: --lambda is required with --lambda-mode explicit");
    fit.lambda_mode = ExplicitLambda{*a.lambda};
  } else {
    fit.lambda_mode = TheoryLambda{a.c};
  }
  fit.opt.step = a.step;
  fit.opt.tol = a.tol;
  fit.opt.max_iter = a.max_iter;
  fit.opt.step_mode = a.step_mode == "safe" ? StepMode::safe : StepMode::fixed;
  fit.opt.seed = a.seed;
  fit.opt.validate();

  const TimeSeriesMatrix data = read_time_series_csv(a.input);
  const VarFit result = fit_var(data, a.lag, fit, resolve_workers(a.workers));
  write_var_model_csv(result.model, a.output);
  json spec{{"input", a.input},
            {"lag", a.lag},
            {"tau", a.tau},
            {"b", a.b},
            {"lambda_mode", lambda_mode_to_json(fit.lambda_mode)},
            {"lambda_rule", lambda_description(fit.lambda_mode)},
            {"lambda", result.lambda},
            {"n", result.n},
            {"optimizer", optimizer_to_json(fit.opt)},
            {"max_iterations", result.max_iterations()},
            {"converged", result.converged()}};
  write_provenance(provenance_path(a.provenance, a.output), command, spec, a.seed, {a.output});
  out << "fit: p=" << data.p() << " d=" << a.lag << " n=" << result.n << " lambda=" << format_double(result.lambda)
      << " converged=" << (result.converged() ? 1 : 0) << " -> " << a.output << '\n';
  return kExitOk;
}

inline int run_experiment_cmd(const ExperimentArgs& a, const std::string& command, std::ostream& out,
                              std::ostream& err) {
  if (a.spec_path.empty() == a.preset.empty()) throw UsageError("experiment: give exactly one of --spec or --preset");
  ExperimentSpec spec = a.spec_path.empty() ? make_preset(a.preset) : spec_from_json(read_json_file(a.spec_path));
  if (a.seed) spec.seed = *a.seed;
  spec.validate();

  namespace fs = std::filesystem;
  fs::create_directories(a.output_dir);
  const std::string csv = (fs::path(a.output_dir) / "results.csv").string();
  const std::string svg = (fs::path(a.output_dir) / "figure.svg").string();
  const std::string prov = (fs::path(a.output_dir) / "provenance.json").string();

  const ResultTable table = run_experiment(spec, resolve_workers(a.workers));
  emit_csv(table, csv);
  const std::string x_axis = default_x_axis(spec);
  const std::string title = (spec.preset.empty() ? std::string(case_name(spec.kind)) : spec.preset) + ", " +
                            lambda_description(spec.lambda_mode);
  for (const auto& w : emit_svg_lines(table, x_axis, "tau", svg, title)) err << "robvar: warning " << w << '\n';

  json spec_json = spec_to_json(spec);
  json prov_doc = make_provenance(command, spec_json, spec.seed, {csv, svg});
  prov_doc["lambda_rule"] = lambda_description(spec.lambda_mode);
  json missing = json::array();
  for (const auto& r : table)
    if (!r.error) missing.push_back({{"n", r.n}, {"df", r.df}, {"tau", r.tau}, {"rep", r.rep}, {"reason", r.missing_reason}});
  prov_doc["missing_cells"] = missing;
  write_text(prov, prov_doc.dump(2) + "\n");

  out << "experiment: " << table.size() << " rows (" << missing.size() << " missing) -> " << a.output_dir << '\n';
  return kExitOk;
}

inline int run_diagnose(const DiagnoseArgs& a, const std::string& command, std::ostream& out) {
  const DiagnoseSpec spec = a.spec_path.empty() ? DiagnoseSpec{} : diagnose_spec_from_json(read_json_file(a.spec_path));
  spec.validate();
  const auto rows = run_diagnostics(spec, resolve_workers(a.workers));
  write_text(a.output, diagnostics_to_csv(rows));
  std::size_t passed = 0;
  for (const auto& r : rows) passed += r.report.deviation_pass ? 1 : 0;
  const double rate = static_cast<double>(passed) / static_cast<double>(rows.size());
  json spec_json = diagnose_spec_to_json(spec);
  json prov = make_provenance(command, spec_json, spec.seed, {a.output});
  prov["lambda_rule"] = lambda_description(spec.lambda_mode);
  prov["deviation_pass_rate"] = rate;
  write_text(provenance_path(a.provenance, a.output), prov.dump(2) + "\n");
  out << "diagnose: " << rows.size() << " replications, deviation_pass_rate=" << format_double(rate) << " -> "
      << a.output << '\n';
  return kExitOk;
}

inline int run_check_stability(const StabilityArgs& a, const std::string& command, std::ostream& out) {
  const VarModel model = read_var_model_csv(a.model_path);
  const double radius = spectral_radius(companion_matrix(model));
  const bool stable = radius < 1.0;
  const json report{{"model", a.model_path}, {"p", model.p()}, {"d", model.d()},
                    {"spectral_radius", radius}, {"stable", stable}};
  write_text(a.output, report.dump(2) + "\n");
  write_provenance(provenance_path(a.provenance, a.output), command, {{"model", a.model_path}}, 0, {a.output});
  out << "spectral_radius=" << format_double(radius) << " stable=" << (stable ? "true" : "false") << '\n';
  return kExitOk;
}

/// args excludes the program name.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Robust sparse VAR estimation under heavy-tailed noise", "robvar"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a path from a DGP spec or a VAR model CSV");
  sim_cmd->add_option("--dgp", sim.dgp_path, "DGP JSON (or a simulate provenance file)")->check(CLI::ExistingFile);
  sim_cmd->add_option("--model", sim.model_path, "VAR model CSV, simulated with Student-t noise")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--df", sim.df, "Student-t degrees of freedom for --model (<= 0 for Gaussian)")
      ->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "Rows to keep");
  sim_cmd->add_option("--burn-in", sim.burn_in, "Discarded initial steps")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--output", sim.output, "Time series CSV")->required();
  sim_cmd->add_option("--provenance", sim.provenance, "Provenance path (default <output>.provenance.json)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a sparse VAR(d) by robust proximal gradient");
  fit_cmd->add_option("--input", fit.input, "Time series CSV (t,z1,...,zp)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--lag", fit.lag, "VAR order d")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tau", fit.tau, "Huber cut-off")->capture_default_str();
  fit_cmd->add_option("--b", fit.b, "Mallows radius")->capture_default_str();
  fit_cmd->add_option("--lambda-mode", fit.lambda_mode, "theory or explicit")
      ->capture_default_str()
      ->check(CLI::IsMember({"theory", "explicit"}));
  fit_cmd->add_option("--c", fit.c, "Theory-mode constant")->capture_default_str();
  fit_cmd->add_option("--lambda", fit.lambda, "Explicit lambda");
  fit_cmd->add_option("--seed", fit.seed, "Initialisation seed")->capture_default_str();
  fit_cmd->add_option("--step", fit.step, "Fixed step size")->capture_default_str();
  fit_cmd->add_option("--tol", fit.tol, "Stopping tolerance")->capture_default_str();
  fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration cap")->capture_default_str();
  fit_cmd->add_option("--step-mode", fit.step_mode, "fixed or safe")
      ->capture_default_str()
      ->check(CLI::IsMember({"fixed", "safe"}));
  fit_cmd->add_option("--workers", fit.workers, "Worker threads (default $ROBVAR_WORKERS or 1)");
  fit_cmd->add_option("--output", fit.output, "Model CSV")->required();
  fit_cmd->add_option("--provenance", fit.provenance, "Provenance path (default <output>.provenance.json)");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a simulation study and write CSV, SVG and provenance");
  exp_cmd->add_option("--spec", exp.spec_path, "Experiment spec JSON (or a provenance file)")
      ->check(CLI::ExistingFile);
  exp_cmd->add_option("--preset", exp.preset, "Named preset")->check(CLI::IsMember(preset_names()));
  exp_cmd->add_option("--output-dir", exp.output_dir, "Output directory")->required();
  exp_cmd->add_option("--seed", exp.seed, "Override the spec seed");
  exp_cmd->add_option("--workers", exp.workers, "Worker threads (default $ROBVAR_WORKERS or 1)");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Deviation and restricted-curvature checks over replications");
  diag_cmd->add_option("--spec", diag.spec_path, "Diagnose spec JSON (defaults if omitted)")
      ->check(CLI::ExistingFile);
  diag_cmd->add_option("--output", diag.output, "Diagnostics CSV")->required();
  diag_cmd->add_option("--workers", diag.workers, "Worker threads (default $ROBVAR_WORKERS or 1)");
  diag_cmd->add_option("--provenance", diag.provenance, "Provenance path (default <output>.provenance.json)");

  StabilityArgs stab;
  auto* stab_cmd = app.add_subcommand("check-stability", "Spectral radius of a VAR model's companion matrix");
  stab_cmd->add_option("--model", stab.model_path, "VAR model CSV")->required()->check(CLI::ExistingFile);
  stab_cmd->add_option("--output", stab.output, "Report JSON")->capture_default_str();
  stab_cmd->add_option("--provenance", stab.provenance, "Provenance path (default <output>.provenance.json)");

  const std::string command = joined_command(args);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", kExitUsage, e.what());
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (*sim_cmd) return run_simulate(sim, *sim_cmd, command, out);
    if (*fit_cmd) return run_fit(fit, command, out);
    if (*exp_cmd) return run_experiment_cmd(exp, command, out, err);
    if (*diag_cmd) return run_diagnose(diag, command, out);
    if (*stab_cmd) return run_check_stability(stab, command, out);
    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    report_error(err, "usage", kExitUsage, e.what());
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  } catch (const SpecError& e) {
    report_error(err, "spec", kExitUsage, e.what());
    return kExitUsage;
  } catch (const StabilityError& e) {
    report_error(err, "stability", kExitRuntime, e.what());
    return kExitRuntime;
  } catch (const IoError& e) {
    report_error(err, "io", kExitRuntime, e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    report_error(err, "runtime", kExitRuntime, e.what());
    return kExitRuntime;
  }
}

}  // namespace robvar::cli

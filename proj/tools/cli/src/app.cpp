#include "ivqr/cli/app.hpp"

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "config.hpp"

#include "ivqr/common/error.hpp"

#ifndef IVQR_VERSION
#define IVQR_VERSION "0.0.0"
#endif

namespace ivqr::cli {

namespace {

void add_data_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--input", c.input, "CSV file with a header row");
  sub->add_option("--y", c.y, "Outcome column");
  sub->add_option("--x", c.x, "Regressor columns (comma list)")->delimiter(',');
  sub->add_option("--z", c.z, "Instrument columns (comma list)")->delimiter(',');
  sub->add_option("--censor", c.censor, "Censoring-point column");
  sub->add_flag("--standardize-z", c.standardize_z, "Rescale instruments to unit second moments");
}

void add_estimation_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--tau", c.taus, "Quantile levels (comma list)")->delimiter(',');
  sub->add_option("--alpha", c.alphas, "Significance levels (comma list)")->delimiter(',');
  sub->add_option("--subsample", c.subsample, "Rows used by the MILP initial estimate");
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--time-limit-ms", c.time_limit_ms, "MILP wall-clock budget");
  sub->add_option("--node-limit", c.node_limit, "MILP branch-and-bound node budget");
  sub->add_flag("--no-early-stop{false}", c.early_stop, "Disable the Q* early stop");
  sub->add_option("--scheme", c.scheme, "Multiplier scheme: bernoulli, gaussian or multinomial");
  sub->add_option("--draws", c.draws, "Bootstrap draws per Jacobian entry");
  sub->add_option("--k", c.k_iterations, "k-step iterations (default 1 + ceil(2 ln n))");
  sub->add_option("--rectangle-draws", c.rectangle_draws, "Simulation draws for rectangle critical values");
  sub->add_flag("--permissive-jacobian", c.permissive_jacobian, "Zero-fill non-estimable Jacobian entries");
  sub->add_option("--target", c.targets, "Joint target as name=col,col (repeatable)");
}

void add_output_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out", c.out, "Output path (stdout when absent)");
  sub->add_option("--threads", c.threads, "Worker threads; results do not depend on it");
  sub->add_flag("--timings", c.timings, "Include wall-clock times in the report");
}

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kData: return "data";
    case ErrorCategory::kNumerical: return "numerical";
  }
  return "numerical";
}

int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig: return kExitConfig;
    case ErrorCategory::kData: return kExitData;
    case ErrorCategory::kNumerical: return kExitNumerical;
  }
  return kExitNumerical;
}

int report_error(std::ostream& err, const std::string& category, const std::string& kind, const std::string& message,
                 int code, json extra = json::object()) {
  json e = {{"category", category}, {"kind", kind}, {"message", message}, {"exit_code", code}};
  for (auto& [key, value] : extra.items()) e[key] = value;
  err << json{{"error", e}}.dump() << '\n';
  return code;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open '" + path + "' for writing", "io");
  file << text;
  if (!file) throw DataError("failed writing '" + path + "'", "io");
}

}  // namespace

const char* tool_version() { return IVQR_VERSION; }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Instrumental-variable quantile regression: MILP initial estimates, k-step refinement, inference",
               "ivqr"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1, 1);

  auto* estimate = app.add_subcommand("estimate", "Estimate β(τ) with standard errors, intervals and joint sets");
  add_data_options(estimate, c);
  add_estimation_options(estimate, c);
  add_output_options(estimate, c);

  auto* jac = app.add_subcommand("jacobian", "Tuning-free Jacobian at a given or estimated β, or a density");
  add_data_options(jac, c);
  add_estimation_options(jac, c);
  add_output_options(jac, c);
  jac->add_option("--beta", c.beta, "Evaluation point (comma list; estimated when absent)")->delimiter(',');
  jac->add_flag("--density", c.density, "Density of the --y column at its τ-quantile");

  auto* exp = app.add_subcommand("milp-export", "Write an MILP formulation in LP format");
  add_data_options(exp, c);
  add_estimation_options(exp, c);
  add_output_options(exp, c);
  exp->add_option("--model", c.model, "ivqr, hd-ivqr, censored or censored-ivqr");
  exp->add_option("--lambda", c.lambda, "Penalty or moment tolerance for hd-ivqr and censored");
  exp->add_option("--big-m", c.big_m, "Override the big-M constant");

  auto* sim = app.add_subcommand("simulate", "Run a simulation experiment: coverage, rmse or early-stop");
  sim->add_option("experiment", c.experiment, "coverage, rmse or early-stop")->required();
  add_estimation_options(sim, c);
  add_output_options(sim, c);
  sim->add_option("--replications", c.replications, "Monte Carlo replications");
  sim->add_option("--n", c.sizes, "Sample size (a comma list for rmse)")->delimiter(',');
  sim->add_option("--q", c.q, "Number of covariates in the coverage design");
  sim->add_option("--lambdas", c.lambdas, "Exponential rates for rmse (comma list)")->delimiter(',');
  sim->add_option("--betas", c.betas, "Evaluation points for rmse (comma list)")->delimiter(',');
  sim->add_option("--p", c.p, "Regressors in the early-stop design");
  sim->add_option("--instruments", c.instruments, "Early-stop instruments: x, logx or x-logx");
  sim->add_option("--format", c.format, "json or text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kExitOk;
    }
    return report_error(err, "config", "usage", e.what(), kExitConfig);
  }
  c.command = app.get_subcommands().front()->get_name();

  try {
    apply_defaults(c);
    validate(c);
    if (c.command == "estimate") {
      write_text(c.out, cmd_estimate(c).dump(2) + "\n", out);
    } else if (c.command == "jacobian") {
      write_text(c.out, cmd_jacobian(c).dump(2) + "\n", out);
    } else if (c.command == "milp-export") {
      out << cmd_milp_export(c).dump(2) << '\n';
    } else {
      const json report = cmd_simulate(c);
      if (c.format == "text") {
        out << simulate_table(report);
        if (!c.out.empty()) write_text(c.out, report.dump(2) + "\n", out);
      } else {
        write_text(c.out, report.dump(2) + "\n", out);
      }
    }
  } catch (const SingularJacobianError& e) {
    return report_error(err, category_name(e.category()), e.kind(), e.what(), exit_code_for(e.category()),
                        {{"lambda_min", e.lambda_min()}, {"iteration", e.iteration()}});
  } catch (const Error& e) {
    return report_error(err, category_name(e.category()), e.kind(), e.what(), exit_code_for(e.category()));
  } catch (const std::bad_alloc&) {
    return report_error(err, "numerical", "memory", "out of memory", kExitNumerical);
  }
  return kExitOk;
}

}  // namespace ivqr::cli

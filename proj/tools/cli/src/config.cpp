#include "config.hpp"

#include <cmath>
#include <set>

#include "ivqr/common/error.hpp"
#include "ivqr/simlab/dgp.hpp"

namespace ivqr::cli {

namespace {

const std::set<std::string> kModels{"ivqr", "hd-ivqr", "censored", "censored-ivqr"};
const std::set<std::string> kExperiments{"coverage", "rmse", "early-stop"};

bool open_unit(double v) { return std::isfinite(v) && v > 0.0 && v < 1.0; }

void require(bool ok, const std::string& message, const std::string& kind) {
  if (!ok) throw ConfigError(message, kind);
}

void validate_columns(const RunConfig& c, bool need_z) {
  require(!c.input.empty(), "--input is required", "columns");
  require(!c.y.empty(), "--y is required", "columns");
  require(!c.x.empty(), "--x needs at least one column", "columns");
  require(!need_z || !c.z.empty(), "--z needs at least one column", "columns");
}

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ColumnRoles RunConfig::roles() const {
  ColumnRoles r;
  r.y = y;
  r.x = x;
  r.z = z.empty() ? x : z;
  r.censor = censor;
  return r;
}

void apply_defaults(RunConfig& c) {
  if (c.taus.empty()) {
    if (c.experiment == "coverage") {
      c.taus = {0.25, 0.5, 0.75};
    } else if (c.experiment == "early-stop") {
      c.taus = {0.7};
    } else {
      c.taus = {0.5};
    }
  }
  if (c.alphas.empty()) c.alphas = {0.05, 0.10};
  if (c.command == "simulate" && c.experiment == "coverage") {
    if (!c.subsample) c.subsample = 200;
    if (!c.node_limit) c.node_limit = 5;
  }
  if (c.command == "simulate" && c.experiment == "early-stop" && !c.node_limit) c.node_limit = 2000;
}

void validate(const RunConfig& c) {
  require(c.threads >= 1, "--threads must be at least 1", "threads");
  require(c.format == "json" || c.format == "text", "--format must be json or text", "format");
  for (double tau : c.taus) require(open_unit(tau), "every --tau must lie strictly between 0 and 1", "tau");
  require(!c.taus.empty(), "--tau needs at least one value", "tau");
  for (double a : c.alphas) require(open_unit(a), "every --alpha must lie strictly between 0 and 1", "alpha");
  require(!c.alphas.empty(), "--alpha needs at least one value", "alpha");
  require(!c.subsample || *c.subsample >= 1, "--subsample must be positive", "subsample");
  require(!c.time_limit_ms || *c.time_limit_ms >= 0, "--time-limit-ms must be non-negative", "limits");
  require(!c.node_limit || *c.node_limit >= 0, "--node-limit must be non-negative", "limits");
  require(!c.draws || *c.draws >= 2, "--draws must be at least 2", "draws");
  require(c.rectangle_draws >= 0, "--rectangle-draws must be non-negative", "draws");
  require(!c.k_iterations || *c.k_iterations >= 1, "--k must be at least 1", "k");
  (void)c.scheme_kind();

  for (const auto& t : c.targets) {
    const auto eq = t.find('=');
    require(eq != std::string::npos && eq > 0 && eq + 1 < t.size(), "--target must look like name=col,col", "target");
  }

  if (c.command == "estimate") {
    validate_columns(c, true);
  } else if (c.command == "jacobian") {
    if (c.density) {
      require(!c.input.empty() && !c.y.empty(), "--density needs --input and --y", "columns");
    } else {
      validate_columns(c, true);
      require(c.beta.empty() || c.beta.size() == c.x.size(), "--beta must have one value per --x column", "dimension");
    }
  } else if (c.command == "milp-export") {
    require(kModels.count(c.model) == 1, "--model must be ivqr, hd-ivqr, censored or censored-ivqr", "model");
    validate_columns(c, c.model == "ivqr" || c.model == "hd-ivqr" || c.model == "censored-ivqr");
    require(c.model != "censored-ivqr" || c.censor.has_value(), "--model censored-ivqr needs a --censor column",
            "columns");
    require(std::isfinite(c.lambda) && c.lambda >= 0.0, "--lambda must be non-negative", "lambda");
    require(!c.big_m || (std::isfinite(*c.big_m) && *c.big_m > 0.0), "--big-m must be positive", "big-m");
    require(c.taus.size() == 1, "milp-export takes a single --tau", "tau");
    require(!c.out.empty(), "milp-export needs --out for the LP file", "output");
  } else if (c.command == "simulate") {
    require(kExperiments.count(c.experiment) == 1,
            "unknown experiment '" + c.experiment + "'; expected coverage, rmse or early-stop", "experiment");
    require(!c.replications || *c.replications >= 1, "--replications must be positive", "replications");
    require(!c.q || *c.q >= 1, "--q must be positive", "q");
    for (long n : c.sizes) require(n >= 1, "--n values must be positive", "n");
    require(c.experiment == "rmse" || c.sizes.size() <= 1, "--n takes a single value for this experiment", "n");
    for (double l : c.lambdas) require(std::isfinite(l) && l > 0.0, "--lambdas must be positive", "lambda");
    for (double b : c.betas) require(std::isfinite(b) && b > 1.0, "--betas must exceed 1", "domain");
    require(!c.p || *c.p >= 1, "--p must be positive", "dimension");
    (void)simlab::parse_instrument_choice(c.instruments);
    require(c.experiment != "early-stop" || c.taus.size() == 1, "early-stop takes a single --tau", "tau");
  } else {
    throw ConfigError("unknown subcommand '" + c.command + "'", "command");
  }
}

json echo(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (c.command == "simulate") {
    j["experiment"] = c.experiment;
    j["replications"] = optional_json(c.replications);
    j["n"] = c.sizes;
    j["q"] = optional_json(c.q);
    j["lambdas"] = c.lambdas;
    j["betas"] = c.betas;
    j["p"] = optional_json(c.p);
    j["instruments"] = c.instruments;
  } else {
    j["input"] = c.input;
    j["columns"] = {{"y", c.y}, {"x", c.x}, {"z", c.z}, {"censor", optional_json(c.censor)}};
    j["standardize_z"] = c.standardize_z;
  }
  j["tau"] = c.taus;
  j["alpha"] = c.alphas;
  j["subsample"] = optional_json(c.subsample);
  j["seed"] = c.seed;
  j["time_limit_ms"] = optional_json(c.time_limit_ms);
  j["node_limit"] = optional_json(c.node_limit);
  j["early_stop"] = c.early_stop;
  j["scheme"] = c.scheme;
  j["draws"] = optional_json(c.draws);
  j["k"] = optional_json(c.k_iterations);
  j["rectangle_draws"] = c.rectangle_draws;
  j["permissive_jacobian"] = c.permissive_jacobian;
  j["targets"] = c.targets;
  if (c.command == "jacobian") {
    j["beta"] = c.beta;
    j["density"] = c.density;
  }
  if (c.command == "milp-export") {
    j["model"] = c.model;
    j["lambda"] = c.lambda;
    j["big_m"] = optional_json(c.big_m);
  }
  j["out"] = c.out;
  j["format"] = c.format;
  return j;
}

}  // namespace ivqr::cli

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ivqr/core_model/dataset.hpp"
#include "ivqr/jacobian/jacobian.hpp"

namespace ivqr::cli {

using nlohmann::json;

/// Everything a subcommand needs, filled by the parser and validated before
/// any data is read.
struct RunConfig {
  std::string command;

  // Data.
  std::string input;
  std::string y;
  std::vector<std::string> x;
  std::vector<std::string> z;
  std::optional<std::string> censor;
  bool standardize_z = false;

  // Estimation.
  /// Empty lists and unset limits take per-command defaults (apply_defaults).
  std::vector<double> taus;
  std::vector<double> alphas;
  std::optional<long> subsample;
  std::uint64_t seed = 0;
  std::optional<long> time_limit_ms;
  std::optional<long> node_limit;
  bool early_stop = true;
  std::string scheme = "bernoulli";
  std::optional<int> draws;
  std::optional<int> k_iterations;
  int rectangle_draws = 0;
  bool permissive_jacobian = false;
  /// Joint targets as "name=col,col"; the full vector is always reported.
  std::vector<std::string> targets;

  // jacobian.
  std::vector<double> beta;
  bool density = false;

  // milp-export.
  std::string model = "ivqr";
  double lambda = 0.0;
  std::optional<double> big_m;

  // simulate.
  std::string experiment;
  std::optional<int> replications;
  std::vector<long> sizes;
  std::optional<int> q;
  std::vector<double> lambdas;
  std::vector<double> betas;
  std::optional<long> p;
  std::string instruments = "x";
  std::string format = "json";

  // Output and execution.
  std::string out;
  int threads = 1;
  bool timings = false;

  jacobian::SchemeKind scheme_kind() const { return jacobian::parse_scheme(scheme); }
  ColumnRoles roles() const;
};

/// Fills command defaults: τ = 0.5 (0.25, 0.5, 0.75 for coverage; 0.7 for
/// early-stop), α = 0.05, 0.10, and the desk-scale coverage settings.
void apply_defaults(RunConfig& config);

/// Throws ConfigError on any inconsistent or out-of-range setting.
void validate(const RunConfig& config);

/// Every user-settable field in a stable order. Threads and the timing flag
/// are left out so that reports do not depend on them.
json echo(const RunConfig& config);

}  // namespace ivqr::cli

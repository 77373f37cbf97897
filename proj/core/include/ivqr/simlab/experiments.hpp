#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivqr/estimator.hpp"
#include "ivqr/milp/branch_and_bound.hpp"
#include "ivqr/simlab/dgp.hpp"

namespace ivqr::simlab {

// ---- coverage -------------------------------------------------------------

struct CoverageConfig {
  JtpaSpec dgp;
  std::vector<double> taus{0.25, 0.5, 0.75};
  std::vector<double> alphas{0.05, 0.10};
  int replications = 400;
  /// Seed, subsample and Jacobian settings for every replication. The seed
  /// field is replaced by a per-(replication, τ) stream.
  EstimatorConfig estimator;
  int threads = 1;
};

/// One coverage figure: shape is "coordinate", "rectangle" or "ellipsoid";
/// target is the coordinate name or the joint target name.
struct CoverageCell {
  double tau = 0.5;
  double alpha = 0.05;
  std::string shape;
  std::string target;
  int passes = 0;
  int replications = 0;
  double coverage = 0.0;
};

struct ReplicationRecord {
  int replication = 0;
  double tau = 0.5;
  bool ok = true;
  std::string error;
  std::string milp_termination;
  /// Coverage flags in the order of CoverageReport::cells for this τ.
  std::vector<bool> covered;
};

struct CoverageReport {
  CoverageConfig config;
  int replications = 0;
  int failures = 0;
  std::vector<CoverageCell> cells;
  std::vector<ReplicationRecord> log;
  double wall_seconds = 0.0;

  const CoverageCell* find(double tau, double alpha, const std::string& shape, const std::string& target) const;
};

/// The joint targets used by the coverage experiment: "full" and the
/// treatment block (D and the D·W interactions).
std::vector<kstep::InferenceTarget> jtpa_targets(int q);

CoverageReport run_coverage_experiment(const CoverageConfig& config);

// ---- Jacobian RMSE --------------------------------------------------------

struct RmseConfig {
  std::vector<double> lambdas{1.0 / 3.0, 10.0};
  std::vector<double> betas{1.5, 3.0};
  std::vector<Eigen::Index> ns{400, 1600};
  int replications = 200;
  std::uint64_t seed = 0;
  jacobian::SchemeKind scheme = jacobian::SchemeKind::kBernoulli;
  /// Draws per estimate; ⌈√n⌉ when absent.
  std::optional<int> draws;
  int threads = 1;
};

struct RmseCell {
  double lambda = 0.0;
  double beta = 0.0;
  Eigen::Index n = 0;
  double true_gamma = 0.0;
  double rmse_tuning_free = 0.0;
  double rmse_kernel = 0.0;
  double mean_tuning_free = 0.0;
  double mean_kernel = 0.0;
  int replications = 0;
  int failures = 0;
};

struct RmseReport {
  RmseConfig config;
  std::vector<RmseCell> cells;
  double wall_seconds = 0.0;

  const RmseCell* find(double lambda, double beta, Eigen::Index n) const;
};

RmseReport run_rmse_experiment(const RmseConfig& config);

// ---- MILP early stop ------------------------------------------------------

struct EarlyStopConfig {
  EarlyStopSpec dgp;
  int replications = 200;
  milp::SolverLimits limits{std::nullopt, 2000};
  int threads = 1;
};

struct EarlyStopRecord {
  int replication = 0;
  std::string termination;
  double q_star = 0.0;
  double moment_sup_norm = 0.0;
  long nodes = 0;
  bool reached = false;
  bool has_incumbent = false;
};

struct EarlyStopReport {
  EarlyStopConfig config;
  int replications = 0;
  /// Replications whose incumbent satisfies ‖G_n(β̂)‖∞ ≤ Q*.
  int reached = 0;
  double frequency = 0.0;
  /// Replications that terminated through the Q* rule.
  int early_stopped = 0;
  /// Early stops whose recomputed moment exceeds Q* + 1e−9.
  int soundness_violations = 0;
  std::vector<EarlyStopRecord> log;
  double wall_seconds = 0.0;
};

EarlyStopReport run_early_stop_experiment(const EarlyStopConfig& config);

}  // namespace ivqr::simlab

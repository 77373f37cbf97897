#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivqr/core_model/dataset.hpp"
#include "ivqr/kstep/pipeline.hpp"
#include "ivqr/milp/ivqr_solver.hpp"

namespace ivqr {

/// End-to-end IVQR estimation: MILP initial estimate on a subsample, the
/// initial Jacobian at that estimate, then the k-step pipeline.
struct EstimatorConfig {
  /// Rows used by the MILP; all rows when absent or ≥ n.
  std::optional<Eigen::Index> subsample;
  /// Master seed. Component streams are derived by label: "milp-subsample",
  /// "milp-start", "jacobian-initial", "jacobian", "rectangle".
  std::uint64_t seed = 0;
  milp::SolverLimits limits;
  bool early_stop = true;
  /// MILP warm start; drawn from N(0, I) when absent.
  std::optional<Eigen::VectorXd> start;
  std::optional<milp::ParameterBox> box;
  std::optional<double> big_m;
  /// Jacobian scheme kind, draws, window and flags apply to both Jacobian
  /// estimates; the seeds are overwritten from the master seed.
  kstep::PipelineConfig pipeline;
};

struct EstimatorSeeds {
  std::uint64_t subsample = 0;
  std::uint64_t start = 0;
  std::uint64_t jacobian_initial = 0;
  std::uint64_t jacobian = 0;
  std::uint64_t rectangle = 0;
};

struct EstimatorResult {
  milp::IvqrSolveResult initial;
  Eigen::Index subsample_size = 0;
  Eigen::VectorXd start;
  jacobian::JacobianEstimate gamma_initial;
  kstep::InferenceReport report;
  EstimatorSeeds seeds;
  std::vector<std::string> warnings;
};

EstimatorSeeds derive_estimator_seeds(std::uint64_t master);

EstimatorResult estimate_ivqr(const Dataset& data, double tau, const EstimatorConfig& config);

}  // namespace ivqr

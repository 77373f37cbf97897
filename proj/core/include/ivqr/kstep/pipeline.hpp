#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivqr/inference/inference.hpp"
#include "ivqr/jacobian/jacobian.hpp"
#include "ivqr/kstep/operator.hpp"

namespace ivqr::kstep {

/// A named coordinate block for joint (rectangle and Wald) inference.
struct InferenceTarget {
  std::string name;
  std::vector<Eigen::Index> coordinates;  // 0-based
};

struct PipelineConfig {
  /// K; defaults to 1 + ⌈2 ln n⌉.
  std::optional<int> k_iterations;
  bool trace_enabled = true;
  /// Options for re-estimating Γ̃ at β̂. The scheme's draw count defaults to
  /// max(200, ⌈√n⌉) when left at 0.
  jacobian::JacobianOptions jacobian;
  std::vector<double> alphas{0.05, 0.10};
  int rectangle_draws = inference::kDefaultRectangleDraws;
  std::uint64_t rectangle_seed = 0;
  /// Joint targets; the full vector is always included as "full".
  std::vector<InferenceTarget> targets;
};

struct JointResult {
  std::string target;
  std::vector<Eigen::Index> coordinates;
  double alpha = 0.05;
  /// Rectangle critical value Φ_α(V̂^{1/2}) restricted to the target.
  double rectangle_critical_value = 0.0;
  /// Wald ellipsoid critical value (χ² quantile); absent when V̂ is singular.
  std::optional<double> wald_critical_value;
};

struct CoordinateIntervals {
  double alpha = 0.05;
  std::vector<inference::Interval> intervals;
};

struct InferenceReport {
  Eigen::VectorXd beta_initial;
  Eigen::VectorXd beta_hat;    // A_K(β̄, Γ̂)
  Eigen::VectorXd beta_tilde;  // A_K(β̂, Γ̃)
  JacobianMatrix gamma_initial;
  jacobian::JacobianEstimate gamma_tilde;
  inference::CovarianceEstimate covariance;
  Eigen::Index n = 0;
  int k_iterations = 0;
  IterationTrace trace_first;
  IterationTrace trace_second;
  std::vector<CoordinateIntervals> intervals;
  std::vector<JointResult> joint;
  bool variance_singular = false;
  std::uint64_t jacobian_seed = 0;
  std::uint64_t rectangle_seed = 0;
  int jacobian_draws = 0;
  std::vector<std::string> warnings;

  /// √n ‖β̃_S − b_S‖∞ ≤ c for the given joint result.
  bool rectangle_covers(const JointResult& joint_result, const Eigen::VectorXd& b) const;
  /// n (β̃_S − b_S)' V̂_SS⁻¹ (β̃_S − b_S) ≤ c; false when no Wald value exists.
  bool ellipsoid_covers(const JointResult& joint_result, const Eigen::VectorXd& b) const;
};

/// Steps after the initial estimates: β̂ = A_K(β̄, Γ̂); Γ̃ re-estimated at β̂;
/// β̃ = A_K(β̂, Γ̃); Ω̂ and V̂ at β̃; then intervals and joint critical values.
InferenceReport run_pipeline(const MomentModel& model, const Eigen::VectorXd& initial_beta,
                             const JacobianMatrix& initial_gamma, const PipelineConfig& config);

}  // namespace ivqr::kstep

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "ivqr/core_model/dataset.hpp"
#include "ivqr/milp/problem.hpp"

namespace ivqr::milp {

/// Rectangular parameter set; entries may be infinite.
struct ParameterBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static ParameterBox symmetric(const Eigen::VectorXd& radius);
  static ParameterBox unbounded(Eigen::Index p);
  Eigen::Index size() const noexcept { return lower.size(); }
  bool bounded() const;
  Eigen::VectorXd center() const;
  Eigen::VectorXd radius() const;
};

/// Two-stage least squares fit of y on x with instruments z. Returns zeros
/// when the projected design is rank deficient.
Eigen::VectorXd two_stage_pilot(const Dataset& data);

/// [−10·s_k, 10·s_k] with s_k = max(1, |pilot_k|).
ParameterBox default_box(const Dataset& data);

/// Largest |Y_i − X_i'β| over the box, bounded from the box centre and radius.
double residual_bound(const Dataset& data, const ParameterBox& box);

/// Twice the residual bound. Throws ConfigError for an unbounded box and
/// DataError for an empty sample.
double choose_big_m(const Dataset& data, const ParameterBox& box);

/// Wedge used when none is given: 1e-7·M.
inline double default_wedge(double big_m) { return 1e-7 * big_m; }

/// Column positions of the named blocks in a built problem. Blocks that a
/// formulation does not use are left empty (or -1 for t).
struct MilpLayout {
  std::vector<int> beta;        // β or θ, free sign
  std::vector<int> beta_plus;   // β⁺ / θ⁺
  std::vector<int> beta_minus;  // β⁻ / θ⁻
  std::vector<int> xi;
  std::vector<int> q;
  std::vector<int> r_plus;
  std::vector<int> r_minus;
  std::vector<int> zeta_plus;
  std::vector<int> zeta_minus;
  int t = -1;
};

struct BuiltMilp {
  MilpProblem problem;
  MilpLayout layout;
  double big_m = 0.0;
  double wedge = 0.0;
};

/// min t over (β ∈ box, ξ ∈ {0,1}ⁿ, t ≥ 0) with
///   −Mξ_i + D ≤ Y_i − X_i'β ≤ M(1 − ξ_i),
///   −t ≤ n⁻¹ Σ_i Z_ij (ξ_i − τ) ≤ t.
/// With a bounded box, throws ConfigError "big-m-too-small" when some
/// residual over the box can exceed M.
BuiltMilp build_ivqr_milp(const Dataset& data, double tau, double big_m, const ParameterBox& box, double wedge);

/// min Σβ⁺ + Σβ⁻ subject to the same linking rows in β⁺ − β⁻ and
/// |n⁻¹ Σ_i Z_ij (ξ_i − τ)| ≤ λ.
BuiltMilp build_hd_ivqr_milp(const Dataset& data, double tau, double lambda, double big_m, double wedge = 0.0);

/// Censored quantile regression with censoring at zero and an ℓ1 penalty λ
/// on θ; λ = 0 gives the unpenalized estimator.
BuiltMilp build_censored_milp(const Dataset& data, double tau, double lambda, double big_m);

/// IV quantile regression with the fitted value max(X_i'β, C_i). Requires
/// censoring points. Rows are scaled by n: −n t ≤ Z'(q − τ) ≤ n t.
BuiltMilp build_censored_ivqr_milp(const Dataset& data, double tau, double big_m, double wedge = 0.0);

/// Q* = Φ⁻¹(1 − n⁻²) · n⁻¹ · sqrt(max_j Σ_i Z_ij²), enabled. Requires n ≥ 2.
EarlyStopRule compute_qstar(const Dataset& data);

/// Uniform draw of m rows without replacement, kept in original order.
Dataset subsample(const Dataset& data, Eigen::Index m, std::uint64_t seed);

/// Integral assignment for a build_ivqr_milp problem induced by β: ξ_i from
/// the indicator 1{Y_i ≤ X_i'β}, t from the moment rows. β is used as given.
Eigen::VectorXd ivqr_assignment(const BuiltMilp& built, const Dataset& data, double tau, const Eigen::VectorXd& beta);

}  // namespace ivqr::milp

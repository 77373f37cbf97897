#pragma once

#include <Eigen/Dense>

#include "ivqr/milp/problem.hpp"

namespace ivqr::milp {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };
const char* lp_status_name(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;  // structural values
  double objective = kInf;
  long iterations = 0;
  /// Largest reduced-cost sign violation at the reported basis.
  double dual_infeasibility = 0.0;
};

struct LpOptions {
  int refactor_interval = 64;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int bland_after = 50;
  long max_iterations = 0;  // 0: scaled to the problem size
};

/// Dense copy of a MILP's continuous relaxation: lo_r ≤ A x ≤ hi_r, bounds.
struct LpData {
  Eigen::MatrixXd a;
  Eigen::VectorXd c;
  Eigen::VectorXd row_lo;
  Eigen::VectorXd row_hi;
  Eigen::VectorXd col_lo;
  Eigen::VectorXd col_hi;
};

LpData make_lp_data(const MilpProblem& problem);

/// Bounded-variable primal simplex (two phases) with the given column bounds.
LpResult solve_lp(const LpData& data, const Eigen::VectorXd& col_lo, const Eigen::VectorXd& col_hi,
                  const LpOptions& options = {});

/// Relaxation of the MILP: binaries relaxed to [0, 1].
LpResult solve_lp(const MilpProblem& problem, const LpOptions& options = {});

}  // namespace ivqr::milp

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>

#include "ivqr/milp/problem.hpp"
#include "ivqr/milp/simplex.hpp"

namespace ivqr::milp {

struct SolverLimits {
  /// Wall-clock budget in milliseconds; absent means unlimited. Zero returns
  /// the warm start (or heuristic) incumbent without solving any LP.
  std::optional<long> time_limit_ms;
  std::optional<long> node_limit;
};

/// Proposes an assignment; may look at the current incumbent (empty when
/// none) and the LP point of the node being processed (empty at the root
/// heuristic call). Proposals are checked for feasibility before use.
using PrimalHeuristic =
    std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd& incumbent, const Eigen::VectorXd& lp_point)>;

/// Value used for the early-stop comparison; defaults to the objective. A
/// problem-specific certifier can recompute it from first principles.
using IncumbentCertifier = std::function<double(const Eigen::VectorXd& assignment)>;

struct BranchAndBoundOptions {
  EarlyStopRule early_stop;
  SolverLimits limits;
  std::optional<Eigen::VectorXd> warm_start;
  PrimalHeuristic heuristic;
  /// Run the heuristic on node LP points every this many nodes (0: root only).
  long heuristic_interval = 0;
  IncumbentCertifier certifier;
  LpOptions lp;
  double feasibility_tol = 1e-7;
};

/// Best-bound-first branch and bound (FIFO among equal bounds), branching on
/// the most fractional binary with ties to the lowest index.
MilpSolution branch_and_bound(const MilpProblem& problem, const BranchAndBoundOptions& options = {});

}  // namespace ivqr::milp

#pragma once

#include <Eigen/Dense>

#include <optional>

#include "ivqr/core_model/dataset.hpp"
#include "ivqr/milp/branch_and_bound.hpp"
#include "ivqr/milp/builders.hpp"

namespace ivqr::milp {

struct IvqrSolveOptions {
  std::optional<ParameterBox> box;  // default_box when absent
  std::optional<double> big_m;      // choose_big_m when absent
  std::optional<double> wedge;      // default_wedge(M) when absent
  bool early_stop = true;
  SolverLimits limits;
  /// Seeds the incumbent with the assignment induced by this β (clipped to
  /// the box).
  std::optional<Eigen::VectorXd> start;
  bool heuristic = true;
  long heuristic_interval = 0;
  LpOptions lp;
};

struct IvqrSolveResult {
  Eigen::VectorXd beta;  // empty when no incumbent was found
  MilpSolution solution;
  EarlyStopRule rule;
  ParameterBox box;
  double big_m = 0.0;
  double wedge = 0.0;
  /// ‖G_n(β)‖∞ recomputed from the moment model.
  double moment_sup_norm = 0.0;
};

/// Coordinate-wise exact line search on ‖G_n‖∞ from `beta`: each coordinate
/// moves to the midpoint of the best constant piece within the box, sweeping
/// until a full pass brings no strict improvement.
Eigen::VectorXd coordinate_search(const Dataset& data, double tau, const ParameterBox& box, Eigen::VectorXd beta,
                                  int max_sweeps = 50);

/// Builds the IVQR MILP and solves it with branch and bound, the Q* early
/// stop (certified on the recomputed moment), the optional warm start and
/// the coordinate-search heuristic.
IvqrSolveResult solve_ivqr(const Dataset& data, double tau, const IvqrSolveOptions& options = {});

}  // namespace ivqr::milp

#include "ivqr/milp/branch_and_bound.hpp"

#include <chrono>
#include <cmath>
#include <queue>
#include <vector>

#include "ivqr/common/error.hpp"

namespace ivqr::milp {

namespace {

struct Node {
  double bound;
  long seq;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  }
};

double prune_tol(double objective) { return 1e-9 * (1.0 + std::abs(objective)); }

}  // namespace

MilpSolution branch_and_bound(const MilpProblem& problem, const BranchAndBoundOptions& options) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };
  if (options.early_stop.enabled && !(options.early_stop.q_star >= 0.0)) {
    throw ConfigError("q_star must be non-negative", "qstar");
  }

  const LpData data = make_lp_data(problem);
  std::vector<int> binaries;
  for (int j = 0; j < problem.num_variables(); ++j) {
    if (problem.variable(j).binary) binaries.push_back(j);
  }

  MilpSolution sol;
  double certified = kInf;
  auto certify = [&](const Eigen::VectorXd& x) {
    return options.certifier ? options.certifier(x) : problem.objective_value(x);
  };
  auto offer = [&](const Eigen::VectorXd& x) {
    if (!problem.is_feasible(x, options.feasibility_tol)) return false;
    const double obj = problem.objective_value(x);
    if (sol.has_incumbent() && obj >= sol.objective) return false;
    sol.assignment = x;
    sol.objective = obj;
    certified = certify(x);
    return true;
  };
  auto early_stop_reached = [&] {
    return options.early_stop.enabled && sol.has_incumbent() && certified <= options.early_stop.q_star;
  };
  auto finish = [&](Termination t, double bound) {
    sol.termination = t;
    sol.best_bound = sol.has_incumbent() ? std::min(bound, sol.objective) : bound;
    sol.gap = sol.has_incumbent() ? std::max(0.0, sol.objective - sol.best_bound) : kInf;
    sol.wall_seconds = elapsed_ms() / 1000.0;
    return sol;
  };
  auto time_up = [&] {
    return options.limits.time_limit_ms && elapsed_ms() >= static_cast<double>(*options.limits.time_limit_ms);
  };
  auto nodes_up = [&] { return options.limits.node_limit && sol.nodes >= *options.limits.node_limit; };

  if (options.warm_start) offer(*options.warm_start);

  // The root heuristic runs before the first Q* check, so a warm start that
  // already meets Q* is still polished.
  const Eigen::VectorXd empty;
  if (options.heuristic && !time_up()) {
    if (auto x = options.heuristic(sol.has_incumbent() ? sol.assignment : empty, empty)) offer(*x);
  }
  if (early_stop_reached()) return finish(Termination::kEarlyStopQstar, -kInf);
  if (time_up()) return finish(Termination::kTimeLimit, -kInf);
  if (nodes_up()) return finish(Termination::kNodeLimit, -kInf);

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long seq = 0;
  open.push({-kInf, seq++, data.col_lo, data.col_hi});

  while (!open.empty()) {
    const double top = open.top().bound;
    if (sol.has_incumbent() && top >= sol.objective - prune_tol(sol.objective)) break;
    if (time_up()) return finish(Termination::kTimeLimit, top);
    if (nodes_up()) return finish(Termination::kNodeLimit, top);

    Node node = open.top();
    open.pop();
    ++sol.nodes;
    const LpResult lp = solve_lp(data, node.lo, node.hi, options.lp);
    sol.lp_iterations += lp.iterations;
    if (lp.status == LpStatus::kInfeasible) continue;
    if (lp.status == LpStatus::kUnbounded) {
      throw NumericalError("LP relaxation is unbounded; bound the continuous variables", "unbounded");
    }
    if (sol.has_incumbent() && lp.objective >= sol.objective - prune_tol(sol.objective)) continue;

    int branch = -1;
    double most = 1e-6;
    for (int j : binaries) {
      const double v = lp.x(j);
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > most) {
        most = frac;
        branch = j;
      }
    }

    if (branch < 0) {
      Eigen::VectorXd x = lp.x;
      for (int j : binaries) x(j) = std::round(x(j));
      offer(x);
      if (early_stop_reached()) {
        return finish(Termination::kEarlyStopQstar, open.empty() ? sol.objective : open.top().bound);
      }
      continue;
    }

    if (options.heuristic && options.heuristic_interval > 0 && sol.nodes % options.heuristic_interval == 0) {
      if (auto x = options.heuristic(sol.has_incumbent() ? sol.assignment : empty, lp.x)) offer(*x);
      if (early_stop_reached()) {
        const double rest = open.empty() ? kInf : open.top().bound;
        return finish(Termination::kEarlyStopQstar, std::min(rest, lp.objective));
      }
    }

    const double bound = std::max(node.bound, lp.objective);
    Node down{bound, seq++, node.lo, node.hi};
    down.hi(branch) = 0.0;
    Node up{bound, seq++, std::move(node.lo), std::move(node.hi)};
    up.lo(branch) = 1.0;
    open.push(std::move(down));
    open.push(std::move(up));
  }

  if (!sol.has_incumbent()) return finish(Termination::kInfeasible, kInf);
  const double bound = open.empty() ? sol.objective : open.top().bound;
  return finish(Termination::kOptimal, bound);
}

}  // namespace ivqr::milp

#include "ivqr/milp/problem.hpp"

#include <cmath>

#include "ivqr/common/error.hpp"

namespace ivqr::milp {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kOptimal: return "optimal";
    case Termination::kEarlyStopQstar: return "early-stop-qstar";
    case Termination::kTimeLimit: return "time-limit";
    case Termination::kNodeLimit: return "node-limit";
    case Termination::kInfeasible: return "infeasible";
  }
  return "unknown";
}

int MilpProblem::add_variable(const std::string& name, double lower, double upper, double objective) {
  if (name.empty()) throw ConfigError("variable name must not be empty", "name");
  if (variable_index_.count(name)) throw ConfigError("duplicate variable name '" + name + "'", "name");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper || lower == kInf || upper == -kInf) {
    throw ConfigError("invalid bounds for variable '" + name + "'", "bounds");
  }
  if (!std::isfinite(objective)) throw ConfigError("objective coefficient must be finite", "objective");
  const int j = num_variables();
  variables_.push_back({name, lower, upper, objective, false});
  variable_index_.emplace(name, j);
  return j;
}

int MilpProblem::add_binary(const std::string& name, double objective) {
  const int j = add_variable(name, 0.0, 1.0, objective);
  variables_.back().binary = true;
  return j;
}

int MilpProblem::add_constraint(const std::string& name, std::vector<std::pair<int, double>> terms, Sense sense,
                                double rhs) {
  if (name.empty()) throw ConfigError("constraint name must not be empty", "name");
  if (constraint_index_.count(name)) throw ConfigError("duplicate constraint name '" + name + "'", "name");
  if (!std::isfinite(rhs)) throw ConfigError("right-hand side must be finite", "rhs");
  for (const auto& [j, a] : terms) {
    if (j < 0 || j >= num_variables()) throw ConfigError("constraint references unknown variable", "index");
    if (!std::isfinite(a)) throw ConfigError("constraint coefficient must be finite", "coefficient");
  }
  const int r = num_constraints();
  constraints_.push_back({name, std::move(terms), sense, rhs});
  constraint_index_.emplace(name, r);
  return r;
}

int MilpProblem::num_binaries() const noexcept {
  int count = 0;
  for (const auto& v : variables_) count += v.binary ? 1 : 0;
  return count;
}

int MilpProblem::index_of(const std::string& name) const {
  const auto it = variable_index_.find(name);
  return it == variable_index_.end() ? -1 : it->second;
}

void MilpProblem::set_objective(int j, double c) {
  if (!std::isfinite(c)) throw ConfigError("objective coefficient must be finite", "objective");
  variables_.at(static_cast<std::size_t>(j)).objective = c;
}

void MilpProblem::set_bounds(int j, double lower, double upper) {
  auto& v = variables_.at(static_cast<std::size_t>(j));
  if (lower > upper) throw ConfigError("invalid bounds for variable '" + v.name + "'", "bounds");
  if (v.binary && (lower < 0.0 || upper > 1.0)) throw ConfigError("binary bounds must stay within [0,1]", "bounds");
  v.lower = lower;
  v.upper = upper;
}

double MilpProblem::objective_value(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (int j = 0; j < num_variables(); ++j) s += variables_[static_cast<std::size_t>(j)].objective * x(j);
  return s;
}

double MilpProblem::max_violation(const Eigen::VectorXd& x) const {
  if (x.size() != num_variables()) return kInf;
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    const auto& v = variables_[static_cast<std::size_t>(j)];
    const double scale = 1.0 + std::abs(x(j));
    worst = std::max(worst, (v.lower - x(j)) / scale);
    worst = std::max(worst, (x(j) - v.upper) / scale);
    if (v.binary && x(j) != 0.0 && x(j) != 1.0) worst = std::max(worst, std::min(x(j), 1.0 - x(j)));
  }
  for (const auto& c : constraints_) {
    double act = 0.0, mag = std::abs(c.rhs);
    for (const auto& [j, a] : c.terms) {
      act += a * x(j);
      mag += std::abs(a * x(j));
    }
    const double scale = 1.0 + mag;
    double viol = 0.0;
    if (c.sense != Sense::kGreaterEqual) viol = std::max(viol, act - c.rhs);
    if (c.sense != Sense::kLessEqual) viol = std::max(viol, c.rhs - act);
    worst = std::max(worst, viol / scale);
  }
  return worst;
}

bool MilpProblem::is_feasible(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != num_variables() || !x.allFinite()) return false;
  for (int j = 0; j < num_variables(); ++j) {
    const auto& v = variables_[static_cast<std::size_t>(j)];
    if (v.binary && x(j) != 0.0 && x(j) != 1.0) return false;
  }
  return max_violation(x) <= tol;
}

}  // namespace ivqr::milp

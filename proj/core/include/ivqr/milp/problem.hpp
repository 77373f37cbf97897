#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ivqr::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { kLessEqual, kEqual, kGreaterEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double objective = 0.0;
  bool binary = false;
};

struct Constraint {
  std::string name;
  std::vector<std::pair<int, double>> terms;  // (variable index, coefficient)
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

/// Minimization MILP: min c'x s.t. rows, bounds, x_b ∈ {0,1} for binaries.
/// Names are unique across variables and across constraints.
class MilpProblem {
 public:
  /// Returns the new variable's index. Throws ConfigError on a duplicate
  /// name or invalid bounds.
  int add_variable(const std::string& name, double lower, double upper, double objective = 0.0);
  int add_binary(const std::string& name, double objective = 0.0);
  int add_constraint(const std::string& name, std::vector<std::pair<int, double>> terms, Sense sense, double rhs);

  int num_variables() const noexcept { return static_cast<int>(variables_.size()); }
  int num_constraints() const noexcept { return static_cast<int>(constraints_.size()); }
  int num_binaries() const noexcept;

  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
  const Variable& variable(int j) const { return variables_.at(static_cast<std::size_t>(j)); }
  int index_of(const std::string& name) const;  // -1 when absent

  void set_objective(int j, double c);
  void set_bounds(int j, double lower, double upper);

  double objective_value(const Eigen::VectorXd& x) const;
  /// Largest scaled violation of bounds, rows and integrality.
  double max_violation(const Eigen::VectorXd& x) const;
  /// Bounds and rows hold within `tol` (scaled by row magnitude) and binaries
  /// are exactly 0 or 1.
  bool is_feasible(const Eigen::VectorXd& x, double tol = 1e-7) const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::unordered_map<std::string, int> variable_index_;
  std::unordered_map<std::string, int> constraint_index_;
};

enum class Termination { kOptimal, kEarlyStopQstar, kTimeLimit, kNodeLimit, kInfeasible };
const char* termination_name(Termination t);

struct MilpSolution {
  Eigen::VectorXd assignment;  // empty when no feasible point is known
  double objective = kInf;
  double best_bound = -kInf;
  double gap = kInf;
  Termination termination = Termination::kInfeasible;
  long nodes = 0;
  long lp_iterations = 0;
  double wall_seconds = 0.0;
  bool has_incumbent() const noexcept { return assignment.size() > 0; }
};

struct EarlyStopRule {
  double q_star = 0.0;
  bool enabled = false;
};

}  // namespace ivqr::milp

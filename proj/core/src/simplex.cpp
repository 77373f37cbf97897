#include "ivqr/milp/simplex.hpp"

#include <cmath>
#include <vector>

#include "ivqr/common/error.hpp"

namespace ivqr::milp {

const char* lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

LpData make_lp_data(const MilpProblem& problem) {
  const int nx = problem.num_variables();
  const int m = problem.num_constraints();
  LpData d;
  d.a = Eigen::MatrixXd::Zero(m, nx);
  d.c.resize(nx);
  d.col_lo.resize(nx);
  d.col_hi.resize(nx);
  d.row_lo.resize(m);
  d.row_hi.resize(m);
  for (int j = 0; j < nx; ++j) {
    const auto& v = problem.variable(j);
    d.c(j) = v.objective;
    d.col_lo(j) = v.lower;
    d.col_hi(j) = v.upper;
  }
  for (int r = 0; r < m; ++r) {
    const auto& con = problem.constraints()[static_cast<std::size_t>(r)];
    for (const auto& [j, a] : con.terms) d.a(r, j) += a;
    d.row_lo(r) = con.sense == Sense::kLessEqual ? -kInf : con.rhs;
    d.row_hi(r) = con.sense == Sense::kGreaterEqual ? kInf : con.rhs;
  }
  return d;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kOptTol = 1e-9;
constexpr double kDualCheckTol = 1e-8;

enum class Where { kBasic, kLower, kUpper, kFree };

// Columns: [structurals | slacks | artificials]; rows read A x − s + e·a = 0.
class Simplex {
 public:
  Simplex(const LpData& data, const Eigen::VectorXd& col_lo, const Eigen::VectorXd& col_hi,
          const LpOptions& options)
      : opt_(options) {
    nx_ = static_cast<int>(data.a.cols());
    m_ = static_cast<int>(data.a.rows());
    n_ = nx_ + 2 * m_;
    full_ = Eigen::MatrixXd::Zero(m_, n_);
    full_.leftCols(nx_) = data.a;
    lo_.resize(n_);
    hi_.resize(n_);
    x_.setZero(n_);
    where_.assign(static_cast<std::size_t>(n_), Where::kLower);
    head_.assign(static_cast<std::size_t>(m_), -1);
    cost_ = Eigen::VectorXd::Zero(n_);
    cost_.head(nx_) = data.c;

    for (int j = 0; j < nx_; ++j) {
      lo_(j) = col_lo(j);
      hi_(j) = col_hi(j);
      if (std::isfinite(lo_(j))) {
        x_(j) = lo_(j);
        where_[static_cast<std::size_t>(j)] = Where::kLower;
      } else if (std::isfinite(hi_(j))) {
        x_(j) = hi_(j);
        where_[static_cast<std::size_t>(j)] = Where::kUpper;
      } else {
        x_(j) = 0.0;
        where_[static_cast<std::size_t>(j)] = Where::kFree;
      }
    }
    const Eigen::VectorXd act = data.a * x_.head(nx_);
    for (int r = 0; r < m_; ++r) {
      const int s = nx_ + r;
      const int a = nx_ + m_ + r;
      full_(r, s) = -1.0;
      lo_(s) = data.row_lo(r);
      hi_(s) = data.row_hi(r);
      lo_(a) = 0.0;
      hi_(a) = 0.0;
      const double v = act(r);
      const double tol = 1e-9 * (1.0 + std::abs(v));
      if (v >= lo_(s) - tol && v <= hi_(s) + tol) {
        head_[static_cast<std::size_t>(r)] = s;
        where_[static_cast<std::size_t>(s)] = Where::kBasic;
        x_(s) = v;
        full_(r, a) = 1.0;
        where_[static_cast<std::size_t>(a)] = Where::kLower;
      } else {
        const double b = v < lo_(s) ? lo_(s) : hi_(s);
        x_(s) = b;
        where_[static_cast<std::size_t>(s)] = v < lo_(s) ? Where::kLower : Where::kUpper;
        const double e = b > v ? 1.0 : -1.0;
        full_(r, a) = e;
        hi_(a) = kInf;
        head_[static_cast<std::size_t>(r)] = a;
        where_[static_cast<std::size_t>(a)] = Where::kBasic;
        x_(a) = std::abs(b - v);
        uses_artificials_ = true;
      }
    }
    max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations : 20000 + 50L * (m_ + n_);
    refactor();
  }

  LpResult run() {
    LpResult out;
    if (uses_artificials_) {
      Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n_);
      for (int r = 0; r < m_; ++r) {
        if (hi_(nx_ + m_ + r) > 0.0) phase1(nx_ + m_ + r) = 1.0;
      }
      const LpStatus s1 = optimize(phase1);
      (void)s1;  // phase 1 is bounded below by zero
      double infeas = 0.0;
      double scale = 1.0;
      for (int r = 0; r < m_; ++r) {
        infeas += x_(nx_ + m_ + r);
        if (std::isfinite(lo_(nx_ + r))) scale = std::max(scale, std::abs(lo_(nx_ + r)));
        if (std::isfinite(hi_(nx_ + r))) scale = std::max(scale, std::abs(hi_(nx_ + r)));
      }
      if (infeas > 1e-7 * scale) {
        out.status = LpStatus::kInfeasible;
        out.iterations = iterations_;
        return out;
      }
      for (int r = 0; r < m_; ++r) {
        const int a = nx_ + m_ + r;
        hi_(a) = 0.0;
        if (where_[static_cast<std::size_t>(a)] != Where::kBasic) x_(a) = 0.0;
      }
      drive_out_artificials();
    }
    const LpStatus s2 = optimize(cost_);
    out.status = s2;
    out.iterations = iterations_;
    out.x = x_.head(nx_);
    if (s2 == LpStatus::kOptimal) {
      out.objective = cost_.head(nx_).dot(out.x);
      out.dual_infeasibility = dual_infeasibility(reduced_costs(cost_));
    } else {
      out.objective = -kInf;
    }
    return out;
  }

 private:
  void refactor() {
    Eigen::MatrixXd basis(m_, m_);
    for (int r = 0; r < m_; ++r) basis.col(r) = full_.col(head_[static_cast<std::size_t>(r)]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
    tab_ = lu.solve(full_);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_; ++j) {
      if (where_[static_cast<std::size_t>(j)] != Where::kBasic && x_(j) != 0.0) rhs -= full_.col(j) * x_(j);
    }
    const Eigen::VectorXd xb = lu.solve(rhs);
    for (int r = 0; r < m_; ++r) x_(head_[static_cast<std::size_t>(r)]) = xb(r);
    since_refactor_ = 0;
  }

  Eigen::VectorXd reduced_costs(const Eigen::VectorXd& c) const {
    Eigen::VectorXd cb(m_);
    for (int r = 0; r < m_; ++r) cb(r) = c(head_[static_cast<std::size_t>(r)]);
    Eigen::VectorXd d = c - tab_.transpose() * cb;
    for (int r = 0; r < m_; ++r) d(head_[static_cast<std::size_t>(r)]) = 0.0;
    return d;
  }

  // Direction in which entering column j improves the objective, or 0.
  int improving_direction(int j, double dj, double tol) const {
    if (lo_(j) == hi_(j)) return 0;
    switch (where_[static_cast<std::size_t>(j)]) {
      case Where::kBasic: return 0;
      case Where::kLower: return dj < -tol ? 1 : 0;
      case Where::kUpper: return dj > tol ? -1 : 0;
      case Where::kFree: return dj < -tol ? 1 : (dj > tol ? -1 : 0);
    }
    return 0;
  }

  double dual_infeasibility(const Eigen::VectorXd& d) const {
    double worst = 0.0;
    for (int j = 0; j < n_; ++j) {
      if (improving_direction(j, d(j), 0.0) != 0) worst = std::max(worst, std::abs(d(j)));
    }
    return worst;
  }

  LpStatus optimize(const Eigen::VectorXd& c) {
    int degenerate_streak = 0;
    bool bland = false;
    bool verified = false;
    for (;;) {
      if (++iterations_ > max_iter_) {
        throw NumericalError("simplex iteration limit reached (possible cycling)", "cycling");
      }
      if (since_refactor_ >= opt_.refactor_interval) refactor();
      const Eigen::VectorXd d = reduced_costs(c);

      int enter = -1;
      int dir = 0;
      double best = 0.0;
      for (int j = 0; j < n_; ++j) {
        const int s = improving_direction(j, d(j), kOptTol);
        if (s == 0) continue;
        if (bland) {
          enter = j;
          dir = s;
          break;
        }
        if (std::abs(d(j)) > best) {
          best = std::abs(d(j));
          enter = j;
          dir = s;
        }
      }
      if (enter < 0) {
        if (verified) return LpStatus::kOptimal;
        // Certify on a fresh factorization before declaring optimality.
        refactor();
        if (dual_infeasibility(reduced_costs(c)) <= kDualCheckTol) return LpStatus::kOptimal;
        verified = true;
        continue;
      }
      verified = false;

      // Ratio test.
      double theta = kInf;
      int leave_row = -1;
      double leave_alpha = 0.0;
      for (int r = 0; r < m_; ++r) {
        const double alpha = dir * tab_(r, enter);
        if (std::abs(alpha) <= kPivotTol) continue;
        const int b = head_[static_cast<std::size_t>(r)];
        double limit;
        if (alpha > 0.0) {
          if (!std::isfinite(lo_(b))) continue;
          limit = std::max(0.0, (x_(b) - lo_(b)) / alpha);
        } else {
          if (!std::isfinite(hi_(b))) continue;
          limit = std::max(0.0, (hi_(b) - x_(b)) / -alpha);
        }
        bool take = false;
        if (leave_row < 0 || limit < theta - 1e-12) {
          take = true;
        } else if (limit <= theta + 1e-12) {
          take = bland ? b < head_[static_cast<std::size_t>(leave_row)] : std::abs(alpha) > std::abs(leave_alpha);
        }
        if (take) {
          theta = std::min(theta, limit);
          leave_row = r;
          leave_alpha = alpha;
        }
      }
      const double span = hi_(enter) - lo_(enter);
      const bool flip = std::isfinite(span) && span <= theta;
      if (!flip && leave_row < 0) return LpStatus::kUnbounded;
      if (flip) theta = span;

      degenerate_streak = theta <= 1e-12 ? degenerate_streak + 1 : 0;
      if (degenerate_streak > opt_.bland_after) bland = true;
      if (degenerate_streak == 0) bland = false;

      if (theta > 0.0) {
        x_(enter) += dir * theta;
        for (int r = 0; r < m_; ++r) x_(head_[static_cast<std::size_t>(r)]) -= theta * dir * tab_(r, enter);
      }
      if (flip) {
        const bool to_upper = dir > 0;
        x_(enter) = to_upper ? hi_(enter) : lo_(enter);
        where_[static_cast<std::size_t>(enter)] = to_upper ? Where::kUpper : Where::kLower;
        continue;
      }
      const int leave = head_[static_cast<std::size_t>(leave_row)];
      const bool hits_lower = leave_alpha > 0.0;
      x_(leave) = hits_lower ? lo_(leave) : hi_(leave);
      where_[static_cast<std::size_t>(leave)] = hits_lower ? Where::kLower : Where::kUpper;
      pivot(leave_row, enter);
    }
  }

  void pivot(int r, int j) {
    head_[static_cast<std::size_t>(r)] = j;
    where_[static_cast<std::size_t>(j)] = Where::kBasic;
    const double piv = tab_(r, j);
    tab_.row(r) /= piv;
    const Eigen::RowVectorXd prow = tab_.row(r);
    const Eigen::VectorXd colj = tab_.col(j);
    for (int i = 0; i < m_; ++i) {
      if (i != r && colj(i) != 0.0) tab_.row(i) -= colj(i) * prow;
    }
    ++since_refactor_;
  }

  void drive_out_artificials() {
    bool changed = false;
    for (int r = 0; r < m_; ++r) {
      const int b = head_[static_cast<std::size_t>(r)];
      if (b < nx_ + m_) continue;
      int best = -1;
      double mag = 1e-7;
      for (int j = 0; j < nx_ + m_; ++j) {
        if (where_[static_cast<std::size_t>(j)] == Where::kBasic) continue;
        if (std::abs(tab_(r, j)) > mag) {
          mag = std::abs(tab_(r, j));
          best = j;
        }
      }
      x_(b) = 0.0;
      if (best < 0) continue;  // redundant row; the artificial stays basic at zero
      where_[static_cast<std::size_t>(b)] = Where::kLower;
      pivot(r, best);
      changed = true;
    }
    if (changed) refactor();
  }

  LpOptions opt_;
  int nx_ = 0, m_ = 0, n_ = 0;
  Eigen::MatrixXd full_;
  Eigen::MatrixXd tab_;
  Eigen::VectorXd lo_, hi_, x_, cost_;
  std::vector<Where> where_;
  std::vector<int> head_;
  bool uses_artificials_ = false;
  long iterations_ = 0;
  long max_iter_ = 0;
  int since_refactor_ = 0;
};

}  // namespace

LpResult solve_lp(const LpData& data, const Eigen::VectorXd& col_lo, const Eigen::VectorXd& col_hi,
                  const LpOptions& options) {
  for (Eigen::Index j = 0; j < col_lo.size(); ++j) {
    if (col_lo(j) > col_hi(j)) {
      LpResult r;
      r.status = LpStatus::kInfeasible;
      return r;
    }
  }
  for (Eigen::Index r = 0; r < data.row_lo.size(); ++r) {
    if (data.row_lo(r) > data.row_hi(r)) {
      LpResult res;
      res.status = LpStatus::kInfeasible;
      return res;
    }
  }
  if (data.a.rows() == 0) {
    // No rows: each variable sits at its cheaper bound.
    LpResult r;
    r.x.resize(data.c.size());
    for (Eigen::Index j = 0; j < data.c.size(); ++j) {
      const double cj = data.c(j);
      const double v = cj > 0.0 ? col_lo(j) : (cj < 0.0 ? col_hi(j) : (std::isfinite(col_lo(j)) ? col_lo(j) : (std::isfinite(col_hi(j)) ? col_hi(j) : 0.0)));
      if (!std::isfinite(v)) {
        r.status = LpStatus::kUnbounded;
        r.objective = -kInf;
        return r;
      }
      r.x(j) = v;
    }
    r.status = LpStatus::kOptimal;
    r.objective = data.c.dot(r.x);
    return r;
  }
  Simplex s(data, col_lo, col_hi, options);
  return s.run();
}

LpResult solve_lp(const MilpProblem& problem, const LpOptions& options) {
  const LpData d = make_lp_data(problem);
  return solve_lp(d, d.col_lo, d.col_hi, options);
}

}  // namespace ivqr::milp

#include "ivqr/milp/ivqr_solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "ivqr/common/error.hpp"
#include "ivqr/core_model/moment.hpp"

namespace ivqr::milp {

namespace {

double sup_abs(const Eigen::VectorXd& s, double scale) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) m = std::max(m, std::abs(s(j)) * scale);
  return m;
}

Eigen::VectorXd clip(const Eigen::VectorXd& beta, const ParameterBox& box) {
  return beta.cwiseMax(box.lower).cwiseMin(box.upper);
}

// One coordinate step. Returns the new value and the sup norm of the piece
// it lies in.
struct Move {
  double value;
  double norm;
};

std::optional<Move> best_piece(const Dataset& data, double tau, const Eigen::VectorXd& beta, Eigen::Index k,
                               double lo, double hi) {
  const Eigen::Index n = data.n();
  const Eigen::Index L = data.L();
  const double inv_n = 1.0 / static_cast<double>(n);
  struct Event {
    double at;
    Eigen::Index row;
    double sign;  // +1 turns on when crossing upward, -1 turns off
  };
  std::vector<Event> events;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(L);
  for (Eigen::Index i = 0; i < n; ++i) {
    double base = data.y()(i);
    for (Eigen::Index l = 0; l < data.p(); ++l) {
      if (l != k) base -= data.x()(i, l) * beta(l);
    }
    const double xk = data.x()(i, k);
    bool on_at_minus_inf;
    if (xk == 0.0) {
      on_at_minus_inf = base <= 0.0;
    } else {
      on_at_minus_inf = xk < 0.0;
      events.push_back({base / xk, i, xk > 0.0 ? 1.0 : -1.0});
    }
    s += data.z().row(i).transpose() * ((on_at_minus_inf ? 1.0 : 0.0) - tau);
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.at != b.at ? a.at < b.at : a.row < b.row;
  });

  const double current = beta(k);
  std::optional<Move> best;
  double best_dist = kInf;
  auto consider = [&](double left, double right) {
    const double a = std::max(left, lo);
    const double b = std::min(right, hi);
    if (!(a < b) && !(left < lo && lo == hi && hi < right)) return;
    double point;
    if (lo == hi) {
      point = lo;
    } else if (std::isfinite(a) && std::isfinite(b)) {
      point = a + 0.5 * (b - a);
    } else if (std::isfinite(b)) {
      point = b - std::max(1.0, std::abs(b));
    } else if (std::isfinite(a)) {
      point = a + std::max(1.0, std::abs(a));
    } else {
      point = current;
    }
    const double norm = sup_abs(s, inv_n);
    const double dist = std::abs(point - current);
    if (!best || norm < best->norm || (norm == best->norm && dist < best_dist)) {
      best = Move{point, norm};
      best_dist = dist;
    }
  };

  double left = -kInf;
  std::size_t e = 0;
  while (e < events.size()) {
    const double v = events[e].at;
    consider(left, v);
    for (; e < events.size() && events[e].at == v; ++e) {
      s += data.z().row(events[e].row).transpose() * events[e].sign;
    }
    left = v;
  }
  consider(left, kInf);
  return best;
}

double full_norm(const Dataset& data, double tau, const Eigen::VectorXd& beta) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(data.L());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    double fit = 0.0;
    for (Eigen::Index k = 0; k < data.p(); ++k) fit += data.x()(i, k) * beta(k);
    s += data.z().row(i).transpose() * ((data.y()(i) <= fit ? 1.0 : 0.0) - tau);
  }
  return sup_abs(s, 1.0 / static_cast<double>(data.n()));
}

}  // namespace

Eigen::VectorXd coordinate_search(const Dataset& data, double tau, const ParameterBox& box, Eigen::VectorXd beta,
                                  int max_sweeps) {
  if (beta.size() != data.p() || box.size() != data.p()) throw ConfigError("dimension mismatch", "dimension");
  if (data.n() == 0) return beta;
  beta = clip(beta, box);
  double current = full_norm(data, tau, beta);
  constexpr double kTol = 1e-12;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (Eigen::Index k = 0; k < data.p(); ++k) {
      const auto move = best_piece(data, tau, beta, k, box.lower(k), box.upper(k));
      if (!move || move->norm > current + kTol) continue;
      Eigen::VectorXd trial = beta;
      trial(k) = move->value;
      const double norm = full_norm(data, tau, trial);
      if (norm > current + kTol) continue;
      if (norm < current - kTol) improved = true;
      beta = std::move(trial);
      current = norm;
    }
    if (!improved) break;
  }
  return beta;
}

IvqrSolveResult solve_ivqr(const Dataset& data, double tau, const IvqrSolveOptions& options) {
  IvqrSolveResult out;
  out.box = options.box ? *options.box : default_box(data);
  out.big_m = options.big_m ? *options.big_m : choose_big_m(data, out.box);
  out.wedge = options.wedge ? *options.wedge : default_wedge(out.big_m);
  out.rule = compute_qstar(data);
  out.rule.enabled = options.early_stop;

  const BuiltMilp built = build_ivqr_milp(data, tau, out.big_m, out.box, out.wedge);
  const auto shared = std::make_shared<const Dataset>(data);
  const MomentModel model(shared, QuantileSpec(tau));
  const auto& lay = built.layout;
  auto beta_of = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd b(data.p());
    for (Eigen::Index k = 0; k < data.p(); ++k) b(k) = x(lay.beta[static_cast<std::size_t>(k)]);
    return b;
  };

  BranchAndBoundOptions bb;
  bb.early_stop = out.rule;
  bb.limits = options.limits;
  bb.lp = options.lp;
  bb.heuristic_interval = options.heuristic_interval;
  bb.certifier = [&](const Eigen::VectorXd& x) { return model.sup_norm(beta_of(x)); };
  if (options.start) {
    if (options.start->size() != data.p()) throw ConfigError("start has the wrong dimension", "dimension");
    bb.warm_start = ivqr_assignment(built, data, tau, clip(*options.start, out.box));
  }
  if (options.heuristic) {
    const Eigen::VectorXd pilot = clip(two_stage_pilot(data), out.box);
    bb.heuristic = [&, pilot](const Eigen::VectorXd& incumbent,
                              const Eigen::VectorXd& lp_point) -> std::optional<Eigen::VectorXd> {
      std::vector<Eigen::VectorXd> starts;
      if (lp_point.size() > 0) starts.push_back(beta_of(lp_point));
      if (incumbent.size() > 0) starts.push_back(beta_of(incumbent));
      if (lp_point.size() == 0) starts.push_back(pilot);
      std::optional<Eigen::VectorXd> best;
      double best_norm = kInf;
      for (const auto& s : starts) {
        const Eigen::VectorXd b = coordinate_search(data, tau, out.box, s);
        Eigen::VectorXd x = ivqr_assignment(built, data, tau, b);
        if (!built.problem.is_feasible(x)) continue;
        const double norm = x(lay.t);
        if (norm < best_norm) {
          best_norm = norm;
          best = std::move(x);
        }
      }
      return best;
    };
  }

  out.solution = branch_and_bound(built.problem, bb);
  if (out.solution.has_incumbent()) {
    out.beta = beta_of(out.solution.assignment);
    out.moment_sup_norm = model.sup_norm(out.beta);
  }
  return out;
}

}  // namespace ivqr::milp

#include "ivqr/milp/builders.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "ivqr/common/distributions.hpp"
#include "ivqr/common/error.hpp"
#include "ivqr/common/rng.hpp"

namespace ivqr::milp {

namespace {

std::string indexed(const char* stem, Eigen::Index i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%04ld", stem, static_cast<long>(i + 1));
  return buf;
}

std::string numbered(const char* stem, Eigen::Index k) { return std::string(stem) + "_" + std::to_string(k + 1); }

void check_common(const Dataset& data, double tau, double big_m) {
  if (data.n() == 0) throw DataError("empty dataset", "empty");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)", "tau");
  if (!(big_m > 0.0) || !std::isfinite(big_m)) throw ConfigError("big-M must be positive and finite", "big-m");
}

void check_wedge(double wedge, double big_m) {
  if (!(wedge >= 0.0) || wedge >= big_m) throw ConfigError("wedge must lie in [0, M)", "wedge");
}

using Terms = std::vector<std::pair<int, double>>;

// Linking rows for ξ_i: X_i'β − Mξ_i ≥ Y_i − M and X_i'β − Mξ_i ≤ Y_i − D,
// where β enters through `fit_terms(i)`.
template <class FitTerms>
void add_linking_rows(MilpProblem& p, const Dataset& data, const std::vector<int>& xi, double big_m, double wedge,
                      FitTerms fit_terms) {
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    Terms terms = fit_terms(i);
    terms.emplace_back(xi[static_cast<std::size_t>(i)], -big_m);
    p.add_constraint(indexed("lo", i), terms, Sense::kGreaterEqual, data.y()(i) - big_m);
    p.add_constraint(indexed("up", i), std::move(terms), Sense::kLessEqual, data.y()(i) - wedge);
  }
}

// Rows scale·Σ_i Z_ij ξ_i ∓ slack_terms against scale·τ·Σ_i Z_ij.
void add_moment_rows(MilpProblem& p, const Dataset& data, double tau, const std::vector<int>& ind, double scale,
                     const Terms& minus_slack, const Terms& plus_slack, double minus_rhs, double plus_rhs) {
  const Eigen::Index n = data.n();
  for (Eigen::Index j = 0; j < data.L(); ++j) {
    Terms terms;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = data.z()(i, j) * scale;
      sum += a;
      if (a != 0.0) terms.emplace_back(ind[static_cast<std::size_t>(i)], a);
    }
    const double rhs = tau * sum;
    Terms up = terms;
    up.insert(up.end(), minus_slack.begin(), minus_slack.end());
    Terms lo = std::move(terms);
    lo.insert(lo.end(), plus_slack.begin(), plus_slack.end());
    p.add_constraint(numbered("mom_up", j), std::move(up), Sense::kLessEqual, rhs + plus_rhs);
    p.add_constraint(numbered("mom_lo", j), std::move(lo), Sense::kGreaterEqual, rhs - minus_rhs);
  }
}

}  // namespace

ParameterBox ParameterBox::symmetric(const Eigen::VectorXd& radius) { return {-radius, radius}; }

ParameterBox ParameterBox::unbounded(Eigen::Index p) {
  return {Eigen::VectorXd::Constant(p, -kInf), Eigen::VectorXd::Constant(p, kInf)};
}

bool ParameterBox::bounded() const { return lower.allFinite() && upper.allFinite(); }

Eigen::VectorXd ParameterBox::center() const { return 0.5 * (lower + upper); }

Eigen::VectorXd ParameterBox::radius() const { return 0.5 * (upper - lower); }

Eigen::VectorXd two_stage_pilot(const Dataset& data) {
  const Eigen::Index p = data.p();
  if (data.n() == 0) return Eigen::VectorXd::Zero(p);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zqr(data.z());
  if (zqr.rank() < data.z().cols()) return Eigen::VectorXd::Zero(p);
  const Eigen::MatrixXd xhat = data.z() * zqr.solve(data.x());
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> xqr(xhat);
  if (xqr.rank() < p) return Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd beta = xqr.solve(data.y());
  return beta.allFinite() ? beta : Eigen::VectorXd::Zero(p);
}

ParameterBox default_box(const Dataset& data) {
  const Eigen::VectorXd pilot = two_stage_pilot(data);
  Eigen::VectorXd radius(pilot.size());
  for (Eigen::Index k = 0; k < pilot.size(); ++k) radius(k) = 10.0 * std::max(1.0, std::abs(pilot(k)));
  return ParameterBox::symmetric(radius);
}

double residual_bound(const Dataset& data, const ParameterBox& box) {
  if (box.size() != data.p()) throw ConfigError("parameter box has the wrong dimension", "box");
  if (!box.bounded()) return kInf;
  const Eigen::VectorXd c = box.center();
  const Eigen::VectorXd h = box.radius();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    double fit = 0.0, spread = 0.0;
    for (Eigen::Index k = 0; k < data.p(); ++k) {
      fit += data.x()(i, k) * c(k);
      spread += std::abs(data.x()(i, k)) * h(k);
    }
    worst = std::max(worst, std::abs(data.y()(i) - fit) + spread);
  }
  return worst;
}

double choose_big_m(const Dataset& data, const ParameterBox& box) {
  if (data.n() == 0) throw DataError("empty dataset", "empty");
  if (box.size() != data.p()) throw ConfigError("parameter box has the wrong dimension", "box");
  if (!box.bounded()) throw ConfigError("unbounded parameter box; supply big-M explicitly", "big-m-required");
  const double m = 2.0 * residual_bound(data, box);
  // A degenerate sample (all residuals zero on a point box) still needs M > 0.
  return m > 0.0 ? m : 1.0;
}

BuiltMilp build_ivqr_milp(const Dataset& data, double tau, double big_m, const ParameterBox& box, double wedge) {
  check_common(data, tau, big_m);
  check_wedge(wedge, big_m);
  if (box.size() != data.p()) throw ConfigError("parameter box has the wrong dimension", "box");
  for (Eigen::Index k = 0; k < box.size(); ++k) {
    if (!(box.lower(k) <= box.upper(k))) throw ConfigError("empty parameter box", "box");
  }
  const double bound = residual_bound(data, box);
  if (bound > big_m) {
    throw ConfigError("big-M " + std::to_string(big_m) + " is below the residual bound " + std::to_string(bound) +
                          " over the parameter box",
                      "big-m-too-small");
  }

  BuiltMilp out;
  out.big_m = big_m;
  out.wedge = wedge;
  auto& p = out.problem;
  auto& lay = out.layout;
  for (Eigen::Index k = 0; k < data.p(); ++k) lay.beta.push_back(p.add_variable(numbered("beta", k), box.lower(k), box.upper(k)));
  for (Eigen::Index i = 0; i < data.n(); ++i) lay.xi.push_back(p.add_binary(indexed("xi", i)));
  lay.t = p.add_variable("t", 0.0, kInf, 1.0);

  add_linking_rows(p, data, lay.xi, big_m, wedge, [&](Eigen::Index i) {
    Terms terms;
    for (Eigen::Index k = 0; k < data.p(); ++k) {
      if (data.x()(i, k) != 0.0) terms.emplace_back(lay.beta[static_cast<std::size_t>(k)], data.x()(i, k));
    }
    return terms;
  });
  const double inv_n = 1.0 / static_cast<double>(data.n());
  add_moment_rows(p, data, tau, lay.xi, inv_n, {{lay.t, -1.0}}, {{lay.t, 1.0}}, 0.0, 0.0);
  return out;
}

BuiltMilp build_hd_ivqr_milp(const Dataset& data, double tau, double lambda, double big_m, double wedge) {
  check_common(data, tau, big_m);
  check_wedge(wedge, big_m);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative", "lambda");

  BuiltMilp out;
  out.big_m = big_m;
  out.wedge = wedge;
  auto& p = out.problem;
  auto& lay = out.layout;
  for (Eigen::Index k = 0; k < data.p(); ++k) {
    lay.beta_plus.push_back(p.add_variable(numbered("beta_plus", k), 0.0, kInf, 1.0));
    lay.beta_minus.push_back(p.add_variable(numbered("beta_minus", k), 0.0, kInf, 1.0));
  }
  for (Eigen::Index i = 0; i < data.n(); ++i) lay.xi.push_back(p.add_binary(indexed("xi", i)));

  add_linking_rows(p, data, lay.xi, big_m, wedge, [&](Eigen::Index i) {
    Terms terms;
    for (Eigen::Index k = 0; k < data.p(); ++k) {
      const double a = data.x()(i, k);
      if (a == 0.0) continue;
      terms.emplace_back(lay.beta_plus[static_cast<std::size_t>(k)], a);
      terms.emplace_back(lay.beta_minus[static_cast<std::size_t>(k)], -a);
    }
    return terms;
  });
  const double inv_n = 1.0 / static_cast<double>(data.n());
  add_moment_rows(p, data, tau, lay.xi, inv_n, {}, {}, lambda, lambda);
  return out;
}

BuiltMilp build_censored_milp(const Dataset& data, double tau, double lambda, double big_m) {
  check_common(data, tau, big_m);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative", "lambda");

  BuiltMilp out;
  out.big_m = big_m;
  auto& p = out.problem;
  auto& lay = out.layout;
  const Eigen::Index n = data.n();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index k = 0; k < data.p(); ++k) {
    lay.beta_plus.push_back(p.add_variable(numbered("theta_plus", k), 0.0, kInf, lambda));
    lay.beta_minus.push_back(p.add_variable(numbered("theta_minus", k), 0.0, kInf, lambda));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    lay.xi.push_back(p.add_binary(indexed("xi", i)));
    lay.r_plus.push_back(p.add_variable(indexed("r_plus", i), 0.0, big_m));
    lay.r_minus.push_back(p.add_variable(indexed("r_minus", i), 0.0, big_m));
    lay.zeta_plus.push_back(p.add_variable(indexed("zeta_plus", i), 0.0, kInf, tau * inv_n));
    lay.zeta_minus.push_back(p.add_variable(indexed("zeta_minus", i), 0.0, kInf, (1.0 - tau) * inv_n));
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    Terms fit;
    for (Eigen::Index k = 0; k < data.p(); ++k) {
      const double a = data.x()(i, k);
      if (a == 0.0) continue;
      fit.emplace_back(lay.beta_plus[static_cast<std::size_t>(k)], a);
      fit.emplace_back(lay.beta_minus[static_cast<std::size_t>(k)], -a);
    }
    p.add_constraint(indexed("fit", i), {{lay.r_plus[u], 1.0}, {lay.zeta_plus[u], 1.0}, {lay.zeta_minus[u], -1.0}},
                     Sense::kEqual, data.y()(i));
    Terms sign = fit;
    sign.emplace_back(lay.xi[u], big_m);
    p.add_constraint(indexed("sign_lo", i), sign, Sense::kGreaterEqual, 0.0);
    p.add_constraint(indexed("sign_up", i), std::move(sign), Sense::kLessEqual, big_m);
    Terms split = std::move(fit);
    split.emplace_back(lay.r_plus[u], -1.0);
    split.emplace_back(lay.r_minus[u], 1.0);
    p.add_constraint(indexed("split", i), std::move(split), Sense::kEqual, 0.0);
    p.add_constraint(indexed("rp_cap", i), {{lay.r_plus[u], 1.0}, {lay.xi[u], big_m}}, Sense::kLessEqual, big_m);
    p.add_constraint(indexed("rm_cap", i), {{lay.r_minus[u], 1.0}, {lay.xi[u], -big_m}}, Sense::kLessEqual, 0.0);
  }
  return out;
}

BuiltMilp build_censored_ivqr_milp(const Dataset& data, double tau, double big_m, double wedge) {
  check_common(data, tau, big_m);
  check_wedge(wedge, big_m);
  if (!data.censor()) throw DataError("censored IVQR needs censoring points", "missing-censor");
  const Eigen::VectorXd& c = *data.censor();

  BuiltMilp out;
  out.big_m = big_m;
  out.wedge = wedge;
  auto& p = out.problem;
  auto& lay = out.layout;
  const Eigen::Index n = data.n();
  for (Eigen::Index k = 0; k < data.p(); ++k) lay.beta.push_back(p.add_variable(numbered("beta", k), -kInf, kInf));
  for (Eigen::Index i = 0; i < n; ++i) {
    lay.xi.push_back(p.add_binary(indexed("xi", i)));
    lay.q.push_back(p.add_binary(indexed("q", i)));
    lay.r_plus.push_back(p.add_variable(indexed("r_plus", i), 0.0, kInf));
    lay.r_minus.push_back(p.add_variable(indexed("r_minus", i), 0.0, kInf));
  }
  lay.t = p.add_variable("t", 0.0, kInf, 1.0);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    Terms fit;
    for (Eigen::Index k = 0; k < data.p(); ++k) {
      if (data.x()(i, k) != 0.0) fit.emplace_back(lay.beta[static_cast<std::size_t>(k)], data.x()(i, k));
    }
    Terms split = fit;
    split.emplace_back(lay.r_plus[u], -1.0);
    split.emplace_back(lay.r_minus[u], 1.0);
    p.add_constraint(indexed("split", i), std::move(split), Sense::kEqual, c(i));
    Terms sign = std::move(fit);
    sign.emplace_back(lay.xi[u], big_m);
    p.add_constraint(indexed("sign_lo", i), sign, Sense::kGreaterEqual, c(i));
    p.add_constraint(indexed("sign_up", i), std::move(sign), Sense::kLessEqual, c(i) + big_m);
    p.add_constraint(indexed("rp_cap", i), {{lay.r_plus[u], 1.0}, {lay.xi[u], big_m}}, Sense::kLessEqual, big_m);
    p.add_constraint(indexed("rm_cap", i), {{lay.r_minus[u], 1.0}, {lay.xi[u], -big_m}}, Sense::kLessEqual, 0.0);
    // −Mq_i + D ≤ Y_i − C_i − r⁺_i ≤ M(1 − q_i)
    const double gap = data.y()(i) - c(i);
    p.add_constraint(indexed("q_lo", i), {{lay.r_plus[u], 1.0}, {lay.q[u], -big_m}}, Sense::kGreaterEqual, gap - big_m);
    p.add_constraint(indexed("q_up", i), {{lay.r_plus[u], 1.0}, {lay.q[u], -big_m}}, Sense::kLessEqual, gap - wedge);
  }
  const double nn = static_cast<double>(n);
  add_moment_rows(p, data, tau, lay.q, 1.0, {{lay.t, -nn}}, {{lay.t, nn}}, 0.0, 0.0);
  return out;
}

EarlyStopRule compute_qstar(const Dataset& data) {
  const Eigen::Index n = data.n();
  if (n < 2) throw DataError("Q* needs at least two observations", "too-few-rows");
  const double nn = static_cast<double>(n);
  double max_ss = 0.0;
  for (Eigen::Index j = 0; j < data.L(); ++j) max_ss = std::max(max_ss, data.z().col(j).squaredNorm());
  return {normal_upper_quantile(1.0 / (nn * nn)) / nn * std::sqrt(max_ss), true};
}

Dataset subsample(const Dataset& data, Eigen::Index m, std::uint64_t seed) {
  const Eigen::Index n = data.n();
  if (m < 1 || m > n) {
    throw ConfigError("subsample size " + std::to_string(m) + " must lie in [1, " + std::to_string(n) + "]",
                      "subsample-size");
  }
  // Selection sampling: row i is kept with probability (needed)/(remaining).
  Rng rng = make_rng(seed, "subsample");
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n && static_cast<Eigen::Index>(rows.size()) < m; ++i) {
    const auto needed = static_cast<double>(m - static_cast<Eigen::Index>(rows.size()));
    const auto remaining = static_cast<double>(n - i);
    if (uniform_open(rng) * remaining < needed) rows.push_back(i);
  }
  return data.select_rows(rows);
}

Eigen::VectorXd ivqr_assignment(const BuiltMilp& built, const Dataset& data, double /*tau*/,
                                const Eigen::VectorXd& beta) {
  const auto& lay = built.layout;
  const auto& p = built.problem;
  if (beta.size() != data.p() || lay.beta.size() != static_cast<std::size_t>(data.p()) || lay.t < 0) {
    throw ConfigError("assignment does not match the IVQR layout", "layout");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p.num_variables());
  for (Eigen::Index k = 0; k < data.p(); ++k) x(lay.beta[static_cast<std::size_t>(k)]) = beta(k);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    double fit = 0.0;
    for (Eigen::Index k = 0; k < data.p(); ++k) fit += data.x()(i, k) * beta(k);
    x(lay.xi[static_cast<std::size_t>(i)]) = data.y()(i) <= fit ? 1.0 : 0.0;
  }
  // Smallest t satisfying every row that contains it.
  double t = 0.0;
  for (const auto& c : p.constraints()) {
    double coef = 0.0, rest = 0.0;
    for (const auto& [j, a] : c.terms) {
      if (j == lay.t) coef += a;
      else rest += a * x(j);
    }
    if (coef == 0.0) continue;
    const double need = (c.rhs - rest) / coef;  // coef·t ≶ rhs − rest
    const bool lower = (coef > 0.0) == (c.sense == Sense::kGreaterEqual);
    if (lower) t = std::max(t, need);
  }
  x(lay.t) = t;
  return x;
}

}  // namespace ivqr::milp

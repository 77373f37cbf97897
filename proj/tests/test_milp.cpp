#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "ivqr/common/distributions.hpp"
#include "ivqr/common/error.hpp"
#include "ivqr/common/rng.hpp"
#include "ivqr/core_model/moment.hpp"
#include "ivqr/milp/branch_and_bound.hpp"
#include "ivqr/milp/builders.hpp"
#include "ivqr/milp/ivqr_solver.hpp"
#include "ivqr/milp/lp_format.hpp"
#include "ivqr/milp/simplex.hpp"
#include "support/milp_oracle.hpp"

using namespace ivqr;
using namespace ivqr::milp;

namespace {

Dataset scalar_data(std::initializer_list<double> y, std::initializer_list<double> x) {
  Eigen::VectorXd yy(static_cast<Eigen::Index>(y.size()));
  Eigen::MatrixXd xx(static_cast<Eigen::Index>(x.size()), 1);
  Eigen::Index i = 0;
  for (double v : y) yy(i++) = v;
  i = 0;
  for (double v : x) xx(i++, 0) = v;
  return Dataset(yy, xx, xx);
}

Dataset random_instance(Rng& rng, int n, int p, int L) {
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, p), z(n, L);
  for (int i = 0; i < n; ++i) {
    y(i) = standard_normal(rng);
    for (int k = 0; k < p; ++k) x(i, k) = k == 0 ? 1.0 : standard_normal(rng);
    for (int j = 0; j < L; ++j) z(i, j) = j < p ? x(i, j) : standard_normal(rng);
  }
  return Dataset(y, x, z);
}

Eigen::VectorXd beta_of(const BuiltMilp& b, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(b.layout.beta.size()));
  for (std::size_t k = 0; k < b.layout.beta.size(); ++k) out(static_cast<Eigen::Index>(k)) = x(b.layout.beta[k]);
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("lp: small textbook problems") {
  MilpProblem p;
  const int t = p.add_variable("t", -kInf, kInf, 1.0);
  p.add_constraint("a", {{t, 1.0}}, Sense::kGreaterEqual, 0.3);
  p.add_constraint("b", {{t, 1.0}}, Sense::kGreaterEqual, -0.3);
  const LpResult r = solve_lp(p);
  CHECK(r.status == LpStatus::kOptimal);
  CHECK(r.objective == doctest::Approx(0.3).epsilon(1e-12));

  // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), value 36.
  MilpProblem q;
  const int x = q.add_variable("x", 0.0, kInf, -3.0);
  const int y = q.add_variable("y", 0.0, kInf, -5.0);
  q.add_constraint("c1", {{x, 1.0}}, Sense::kLessEqual, 4.0);
  q.add_constraint("c2", {{y, 2.0}}, Sense::kLessEqual, 12.0);
  q.add_constraint("c3", {{x, 3.0}, {y, 2.0}}, Sense::kLessEqual, 18.0);
  const LpResult s = solve_lp(q);
  CHECK(s.status == LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(-36.0).epsilon(1e-12));
  CHECK(s.x(x) == doctest::Approx(2.0));
  CHECK(s.x(y) == doctest::Approx(6.0));
  CHECK(s.dual_infeasibility <= 1e-8);
}

TEST_CASE("lp: infeasible and unbounded statuses") {
  MilpProblem p;
  const int x = p.add_variable("x", 0.0, 1.0);
  p.add_constraint("r", {{x, 1.0}}, Sense::kGreaterEqual, 2.0);
  CHECK(solve_lp(p).status == LpStatus::kInfeasible);

  MilpProblem q;
  const int u = q.add_variable("u", -kInf, kInf, 1.0);
  q.add_constraint("r", {{u, 1.0}}, Sense::kLessEqual, 5.0);
  CHECK(solve_lp(q).status == LpStatus::kUnbounded);

  MilpProblem e;
  const int a = e.add_variable("a", 0.0, kInf, 1.0);
  const int b = e.add_variable("b", 0.0, kInf, 2.0);
  e.add_constraint("eq", {{a, 1.0}, {b, 1.0}}, Sense::kEqual, 3.0);
  const LpResult r = solve_lp(e);
  CHECK(r.status == LpStatus::kOptimal);
  CHECK(r.objective == doctest::Approx(3.0));
}

TEST_CASE("ivqr milp: single observation cannot balance") {
  const Dataset d = scalar_data({0.5}, {1.0});
  const BuiltMilp b = build_ivqr_milp(d, 0.5, 10.0, ParameterBox::symmetric(Eigen::VectorXd::Constant(1, 3.0)), 0.0);
  CHECK(b.problem.num_variables() == 3);
  CHECK(b.problem.num_binaries() == 1);
  const MilpSolution s = branch_and_bound(b.problem);
  CHECK(s.termination == Termination::kOptimal);
  CHECK(s.objective == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ivqr milp: big-M forces the indicator") {
  // Y − Xβ = 0.5 − 3.5 = −3 with β pinned: only ξ = 1 is feasible.
  const Dataset d = scalar_data({0.5}, {1.0});
  const ParameterBox box{Eigen::VectorXd::Constant(1, 3.5), Eigen::VectorXd::Constant(1, 3.5)};
  const BuiltMilp b = build_ivqr_milp(d, 0.5, 10.0, box, 1e-6);
  Eigen::VectorXd x(3);
  x << 3.5, 0.0, 0.5;
  CHECK_FALSE(b.problem.is_feasible(x));
  x(1) = 1.0;
  CHECK(b.problem.is_feasible(x));
  const MilpSolution s = branch_and_bound(b.problem);
  CHECK(s.assignment(b.layout.xi[0]) == 1.0);
}

TEST_CASE("ivqr milp: n=4 hand instance matches enumeration") {
  Eigen::VectorXd y(4);
  y << 0.3, -1.2, 2.0, 0.7;
  Eigen::MatrixXd x(4, 2);
  x << 1, 0.5, 1, -1.0, 1, 1.5, 1, 0.2;
  Eigen::MatrixXd z(4, 2);
  z << 1, 0.1, 1, -0.4, 1, 0.9, 1, -0.6;
  const Dataset d(y, x, z);
  const ParameterBox box = ParameterBox::symmetric(Eigen::VectorXd::Constant(2, 5.0));
  const double m = choose_big_m(d, box);
  const double wedge = default_wedge(m);
  for (double tau : {0.25, 0.5, 0.7}) {
    const BuiltMilp b = build_ivqr_milp(d, tau, m, box, wedge);
    const MilpSolution s = branch_and_bound(b.problem);
    const auto ref = oracle::ivqr_brute_force(y, x, z, tau, box.lower, box.upper, wedge);
    CHECK(s.termination == Termination::kOptimal);
    CHECK(std::abs(s.objective - ref.objective) <= 1e-7);
  }
}

TEST_CASE("ivqr milp: random instances match enumeration and respect forcing") {
  Rng rng = make_rng(11, "milp-unit");
  for (int rep = 0; rep < 12; ++rep) {
    const int n = 5 + rep % 5, p = 1 + rep % 2, L = p + rep % 2;
    const Dataset d = random_instance(rng, n, p, L);
    const double tau = 0.2 + 0.6 * uniform_open(rng);
    const ParameterBox box = ParameterBox::symmetric(Eigen::VectorXd::Constant(p, 4.0));
    const double m = choose_big_m(d, box);
    const double wedge = default_wedge(m);
    const BuiltMilp b = build_ivqr_milp(d, tau, m, box, wedge);
    const MilpSolution s = branch_and_bound(b.problem);
    const auto ref = oracle::ivqr_brute_force(d.y(), d.x(), d.z(), tau, box.lower, box.upper, wedge);
    REQUIRE(s.termination == Termination::kOptimal);
    CHECK(std::abs(s.objective - ref.objective) <= 1e-7);
    CHECK(s.gap <= 1e-9 * (1.0 + std::abs(s.objective)));

    // Relaxation bound.
    CHECK(solve_lp(b.problem).objective <= s.objective + 1e-9);

    // ξ tracks the indicator away from the wedge; t matches the moment.
    const Eigen::VectorXd beta = beta_of(b, s.assignment);
    bool clear = true;
    for (int i = 0; i < n; ++i) {
      const double r = d.y()(i) - d.x().row(i).dot(beta);
      if (std::abs(r) < wedge) {
        clear = false;
        continue;
      }
      CHECK(s.assignment(b.layout.xi[static_cast<std::size_t>(i)]) == (r <= 0.0 ? 1.0 : 0.0));
    }
    if (clear) {
      const MomentModel model(std::make_shared<const Dataset>(d), QuantileSpec(tau));
      CHECK(std::abs(model.sup_norm(beta) - s.objective) <= 1e-7);
    }
  }
}

TEST_CASE("ivqr milp: big-M below the residual bound is rejected") {
  const Dataset d = scalar_data({1.0, -1.0}, {1.0, -1.0});
  const ParameterBox box = ParameterBox::symmetric(Eigen::VectorXd::Constant(1, 5.0));
  try {
    build_ivqr_milp(d, 0.5, 3.0, box, 0.0);
    FAIL("expected big-m-too-small");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == "big-m-too-small");
  }
}

TEST_CASE("choose_big_m") {
  const Dataset d = scalar_data({1.0, -0.5, 0.2}, {-1.0, 0.5, 1.0});
  CHECK(choose_big_m(d, ParameterBox::symmetric(Eigen::VectorXd::Constant(1, 5.0))) == doctest::Approx(12.0));

  const ParameterBox point{Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 2.0)};
  // max |Y − 2X| = max(3, 1.5, 1.8) = 3
  CHECK(choose_big_m(d, point) == doctest::Approx(6.0));

  CHECK_THROWS_AS(choose_big_m(d, ParameterBox::unbounded(1)), ConfigError);
  CHECK_THROWS_AS(Dataset(Eigen::VectorXd(0), Eigen::MatrixXd(0, 1), Eigen::MatrixXd(0, 1)), DataError);
}

TEST_CASE("branch and bound: integral relaxation and early stop") {
  MilpProblem p;
  const int a = p.add_binary("a", 1.0);
  const int b = p.add_binary("b", 2.0);
  p.add_constraint("cover", {{a, 1.0}, {b, 1.0}}, Sense::kGreaterEqual, 1.0);
  const MilpSolution s = branch_and_bound(p);
  CHECK(s.termination == Termination::kOptimal);
  CHECK(s.nodes == 1);
  CHECK(s.objective == doctest::Approx(1.0));

  Rng rng = make_rng(5, "milp-unit-es");
  const Dataset d = random_instance(rng, 10, 2, 2);
  const ParameterBox box = ParameterBox::symmetric(Eigen::VectorXd::Constant(2, 4.0));
  const double m = choose_big_m(d, box);
  const BuiltMilp built = build_ivqr_milp(d, 0.5, m, box, default_wedge(m));
  BranchAndBoundOptions opt;
  opt.early_stop = {10.0, true};
  const MilpSolution es = branch_and_bound(built.problem, opt);
  CHECK(es.termination == Termination::kEarlyStopQstar);
  CHECK(es.gap >= 0.0);
  CHECK(es.objective <= 10.0);

  opt.early_stop.q_star = -1.0;
  CHECK_THROWS_AS(branch_and_bound(built.problem, opt), ConfigError);
}

TEST_CASE("branch and bound: limits return the incumbent") {
  Rng rng = make_rng(6, "milp-unit-limits");
  const Dataset d = random_instance(rng, 12, 2, 3);
  const ParameterBox box = ParameterBox::symmetric(Eigen::VectorXd::Constant(2, 4.0));
  const double m = choose_big_m(d, box);
  const BuiltMilp built = build_ivqr_milp(d, 0.5, m, box, default_wedge(m));
  BranchAndBoundOptions opt;
  opt.warm_start = ivqr_assignment(built, d, 0.5, Eigen::VectorXd::Zero(2));
  opt.limits.time_limit_ms = 0;
  const MilpSolution zero = branch_and_bound(built.problem, opt);
  CHECK(zero.termination == Termination::kTimeLimit);
  CHECK(zero.nodes == 0);
  CHECK(zero.objective == doctest::Approx(opt.warm_start->coeff(built.layout.t)));

  opt.limits = {};
  opt.limits.node_limit = 3;
  const MilpSolution few = branch_and_bound(built.problem, opt);
  CHECK(few.nodes <= 3);
  CHECK(few.objective <= zero.objective);
  opt.limits = {};
  const MilpSolution full = branch_and_bound(built.problem, opt);
  CHECK(full.objective <= few.objective);
  CHECK(full.termination == Termination::kOptimal);
}

TEST_CASE("branch and bound: infeasible root") {
  MilpProblem p;
  const int a = p.add_binary("a");
  p.add_constraint("half", {{a, 2.0}}, Sense::kEqual, 1.0);
  CHECK(branch_and_bound(p).termination == Termination::kInfeasible);
}

TEST_CASE("compute_qstar") {
  const int n = 100;
  const Dataset d(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Ones(n, 1), Eigen::MatrixXd::Ones(n, 1));
  const EarlyStopRule r = compute_qstar(d);
  CHECK(r.enabled);
  CHECK(r.q_star == doctest::Approx(0.3719016485455709).epsilon(1e-10));

  const Dataset four(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Ones(4, 1), Eigen::MatrixXd::Ones(4, 1));
  CHECK(compute_qstar(four).q_star == doctest::Approx(normal_quantile(1.0 - 1.0 / 16.0) * 0.25 * 2.0).epsilon(1e-12));

  // Scaling Z scales both Q* and the moment, so the stop decision is unchanged.
  Rng rng = make_rng(3, "qstar");
  const Dataset base = random_instance(rng, 40, 2, 2);
  const Dataset scaled = base.with_instruments(2.0 * base.z(), {});
  CHECK(compute_qstar(scaled).q_star == doctest::Approx(2.0 * compute_qstar(base).q_star).epsilon(1e-14));
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(2, 0.1);
  const MomentModel m1(std::make_shared<const Dataset>(base), QuantileSpec(0.5));
  const MomentModel m2(std::make_shared<const Dataset>(scaled), QuantileSpec(0.5));
  CHECK((m1.sup_norm(beta) <= compute_qstar(base).q_star) == (m2.sup_norm(beta) <= compute_qstar(scaled).q_star));

  const Dataset one = scalar_data({1.0}, {1.0});
  CHECK_THROWS_AS(compute_qstar(one), DataError);
}

TEST_CASE("hd ivqr milp") {
  Rng rng = make_rng(8, "hd");
  const Dataset d = random_instance(rng, 8, 2, 2);
  // λ ≥ max|moment| for any ξ: β = 0 is optimal.
  const double m = 2.0 * (d.y().cwiseAbs().maxCoeff() + 10.0 * d.x().cwiseAbs().rowwise().sum().maxCoeff());
  const BuiltMilp loose = build_hd_ivqr_milp(d, 0.5, 10.0, m);
  const MilpSolution s = branch_and_bound(loose.problem);
  CHECK(s.termination == Termination::kOptimal);
  CHECK(s.objective == doctest::Approx(0.0));

  // Duplicating an x column leaves the optimal ℓ1 value unchanged.
  Eigen::MatrixXd x2(d.n(), 3);
  x2 << d.x(), d.x().col(1);
  Eigen::MatrixXd z2(d.n(), 3);
  z2 << d.z(), d.z().col(1);
  const Dataset dup(d.y(), x2, z2);
  const double lambda = 0.2;
  const MilpSolution a = branch_and_bound(build_hd_ivqr_milp(d, 0.5, lambda, m).problem);
  const MilpSolution b = branch_and_bound(build_hd_ivqr_milp(dup, 0.5, lambda, m).problem);
  REQUIRE(a.termination == Termination::kOptimal);
  REQUIRE(b.termination == Termination::kOptimal);
  CHECK(b.objective == doctest::Approx(a.objective).epsilon(1e-7));
}

TEST_CASE("hd ivqr milp: lambda zero matches the t = 0 feasible set") {
  // Six rows, scalar β, Z = 1, τ = 0.5: t = 0 needs exactly three ξ = 1.
  const Dataset d = scalar_data({0.5, 1.1, 1.9, 2.4, 3.2, 4.0}, {1, 1, 1, 1, 1, 1});
  const double m = 40.0;
  const MilpSolution hd = branch_and_bound(build_hd_ivqr_milp(d, 0.5, 0.0, m).problem);
  const BuiltMilp eq = build_ivqr_milp(d, 0.5, m, ParameterBox::symmetric(Eigen::VectorXd::Constant(1, 10.0)), 0.0);
  const MilpSolution base = branch_and_bound(eq.problem);
  REQUIRE(hd.termination == Termination::kOptimal);
  CHECK(base.objective == doctest::Approx(0.0));
  // Smallest |β| with three observations at or below it: β = 1.9.
  CHECK(hd.objective == doctest::Approx(1.9));
}

namespace {

double check_loss(double u, double tau) { return u * (tau - (u <= 0.0 ? 1.0 : 0.0)); }

// Scalar Powell objective; piecewise linear in θ with kinks at y_i/x_i and 0.
double powell_min(const Dataset& d, double tau, double lambda) {
  std::vector<double> cands{0.0};
  for (Eigen::Index i = 0; i < d.n(); ++i) cands.push_back(d.y()(i) / d.x()(i, 0));
  double best = kInf;
  for (double th : cands) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d.n(); ++i) s += check_loss(d.y()(i) - std::max(d.x()(i, 0) * th, 0.0), tau);
    best = std::min(best, s / static_cast<double>(d.n()) + lambda * std::abs(th));
  }
  return best;
}

}  // namespace

TEST_CASE("censored milp") {
  const Dataset pos = scalar_data({1.0, 2.5, 0.7, 3.1, 1.8, 2.2}, {1.0, 2.0, 0.5, 2.5, 1.5, 1.0});
  for (double tau : {0.3, 0.5, 0.8}) {
    const BuiltMilp b = build_censored_milp(pos, tau, 0.0, 50.0);
    const MilpSolution s = branch_and_bound(b.problem);
    REQUIRE(s.termination == Termination::kOptimal);
    CHECK(s.objective == doctest::Approx(powell_min(pos, tau, 0.0)).epsilon(1e-9));
    for (std::size_t i = 0; i < b.layout.r_minus.size(); ++i) CHECK(s.assignment(b.layout.r_minus[i]) <= 1e-9);
  }

  // Mixed signs exercise the censoring branch.
  const Dataset mixed = scalar_data({0.0, 0.0, 1.5, 0.2, 2.0, 0.0}, {-1.0, -2.0, 1.0, 0.3, 2.0, -0.5});
  const BuiltMilp bm = build_censored_milp(mixed, 0.5, 0.0, 50.0);
  const MilpSolution sm = branch_and_bound(bm.problem);
  CHECK(sm.objective == doctest::Approx(powell_min(mixed, 0.5, 0.0)).epsilon(1e-9));
  for (std::size_t i = 0; i < bm.layout.xi.size(); ++i) {
    if (sm.assignment(bm.layout.xi[i]) == 1.0) CHECK(sm.assignment(bm.layout.r_plus[i]) <= 1e-9);
  }

  // Heavy penalty: θ = 0 and the loss of Y against 0.
  const BuiltMilp heavy = build_censored_milp(pos, 0.5, 1e3, 50.0);
  const MilpSolution sh = branch_and_bound(heavy.problem);
  double loss0 = 0.0;
  for (Eigen::Index i = 0; i < pos.n(); ++i) loss0 += check_loss(pos.y()(i), 0.5);
  CHECK(sh.objective == doctest::Approx(loss0 / 6.0).epsilon(1e-9));
}

namespace {

Dataset with_censor(const Dataset& d, const Eigen::VectorXd& c) {
  return Dataset(d.y(), d.x(), d.z(), {}, {}, c);
}

// Scalar brute force: q_i = 1{y_i ≤ max(x_i β, c_i)} on a grid of candidate β
// between and beyond the breakpoints y_i/x_i.
double censored_ivqr_brute(const Dataset& d, double tau) {
  std::vector<double> bp;
  for (Eigen::Index i = 0; i < d.n(); ++i) bp.push_back(d.y()(i) / d.x()(i, 0));
  std::sort(bp.begin(), bp.end());
  std::vector<double> cands{bp.front() - 1.0, bp.back() + 1.0};
  for (std::size_t k = 0; k < bp.size(); ++k) {
    cands.push_back(bp[k]);
    if (k + 1 < bp.size()) cands.push_back(0.5 * (bp[k] + bp[k + 1]));
  }
  double best = kInf;
  for (double b : cands) {
    double t = 0.0;
    for (Eigen::Index j = 0; j < d.L(); ++j) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < d.n(); ++i) {
        const double fit = std::max(d.x()(i, 0) * b, (*d.censor())(i));
        s += d.z()(i, j) * ((d.y()(i) <= fit ? 1.0 : 0.0) - tau);
      }
      t = std::max(t, std::abs(s) / static_cast<double>(d.n()));
    }
    best = std::min(best, t);
  }
  return best;
}

}  // namespace

TEST_CASE("censored ivqr milp") {
  const Dataset base = scalar_data({0.4, 1.3, -0.8, 2.1, 0.9}, {1.0, 0.8, 1.2, 1.5, 0.6});
  // Very low censoring points reduce to the uncensored problem.
  const Dataset low = with_censor(base, Eigen::VectorXd::Constant(5, -50.0));
  const MilpSolution sc = branch_and_bound(build_censored_ivqr_milp(low, 0.5, 500.0).problem);
  const MilpSolution s9 = branch_and_bound(
      build_ivqr_milp(base, 0.5, 500.0, ParameterBox::symmetric(Eigen::VectorXd::Constant(1, 40.0)), 0.0).problem);
  REQUIRE(sc.termination == Termination::kOptimal);
  CHECK(sc.objective == doctest::Approx(s9.objective).epsilon(1e-9));

  // Every Y far below its censoring point: q ≡ 1 and t = 1 − τ.
  const Dataset high = with_censor(scalar_data({-5, -6, -7}, {1, 1, 1}), Eigen::VectorXd::Constant(3, 10.0));
  const BuiltMilp bh = build_censored_ivqr_milp(high, 0.3, 100.0);
  const MilpSolution sh = branch_and_bound(bh.problem);
  CHECK(sh.objective == doctest::Approx(0.7).epsilon(1e-12));
  for (int j : bh.layout.q) CHECK(sh.assignment(j) == 1.0);

  // Mixed instances against enumeration.
  Rng rng = make_rng(4, "cens-ivqr");
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 6 + rep % 3;
    Eigen::VectorXd y(n), c(n);
    Eigen::MatrixXd x(n, 1), z(n, 2);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = 0.5 + uniform_open(rng);
      y(i) = standard_normal(rng) + x(i, 0);
      c(i) = uniform_open(rng) < 0.4 ? y(i) + 0.5 : -0.5 + 0.2 * standard_normal(rng);
      z(i, 0) = 1.0;
      z(i, 1) = x(i, 0);
    }
    const Dataset d(y, x, z, {}, {}, c);
    for (double tau : {0.4, 0.6}) {
      const MilpSolution s = branch_and_bound(build_censored_ivqr_milp(d, tau, 200.0).problem);
      REQUIRE(s.termination == Termination::kOptimal);
      CHECK(std::abs(s.objective - censored_ivqr_brute(d, tau)) <= 1e-7);
    }
  }

  CHECK_THROWS_AS(build_censored_ivqr_milp(base, 0.5, 10.0), DataError);
}

TEST_CASE("lp export: golden fixture, determinism and round trip") {
  const Dataset d = scalar_data({0.5}, {1.0});
  const BuiltMilp b = build_ivqr_milp(d, 0.5, 10.0, ParameterBox::symmetric(Eigen::VectorXd::Constant(1, 3.0)), 1e-6);
  const std::string text = write_lp(b.problem);
  CHECK(text == read_file(std::filesystem::path(IVQR_TEST_DATA_DIR) / "ivqr_n1.lp"));
  CHECK(write_lp(b.problem) == text);

  const auto path = std::filesystem::temp_directory_path() / "ivqr_test_export.lp";
  export_lp_file(b.problem, path);
  CHECK(read_file(path) == text);
  std::filesystem::remove(path);

  Rng rng = make_rng(9, "lp-roundtrip");
  const Dataset big = random_instance(rng, 40, 2, 3);
  const ParameterBox box = default_box(big);
  const double m = choose_big_m(big, box);
  for (const MilpProblem& p : {build_ivqr_milp(big, 0.3, m, box, default_wedge(m)).problem,
                               build_hd_ivqr_milp(big, 0.5, 0.1, m).problem,
                               build_censored_milp(big, 0.5, 0.05, m).problem}) {
    const std::string first = write_lp(p);
    const MilpProblem parsed = parse_lp(first);
    CHECK(parsed.num_variables() == p.num_variables());
    CHECK(parsed.num_constraints() == p.num_constraints());
    CHECK(parsed.num_binaries() == p.num_binaries());
    CHECK(write_lp(parsed) == first);
  }
  std::istringstream lines(write_lp(build_ivqr_milp(big, 0.3, m, box, 0.0).problem));
  std::string line;
  while (std::getline(lines, line)) CHECK(line.size() <= 78);
}

TEST_CASE("lp parse: errors and tolerant input") {
  CHECK_THROWS_AS(parse_lp("Minimize\n obj: x\nSubject To\n c: x >=\n"), DataError);
  CHECK_THROWS_AS(parse_lp("Maximize\n obj: x\nEnd\n"), DataError);
  const MilpProblem p = parse_lp("\\ comment\nMinimize\n obj: 2 x + y\nSubject To\n c1: x + y\n >= 1\nBounds\n"
                                 " x <= 4\n -inf <= y <= 3\nBinaries\nEnd\n");
  CHECK(p.num_variables() == 2);
  CHECK(p.variable(1).lower == -kInf);
  CHECK(p.variable(0).upper == 4.0);
  const LpResult r = solve_lp(p);
  CHECK(r.objective == doctest::Approx(1.0));
}

TEST_CASE("problem: unique names") {
  MilpProblem p;
  p.add_variable("x", 0.0, 1.0);
  CHECK_THROWS_AS(p.add_variable("x", 0.0, 1.0), ConfigError);
  p.add_constraint("c", {{0, 1.0}}, Sense::kLessEqual, 1.0);
  CHECK_THROWS_AS(p.add_constraint("c", {{0, 1.0}}, Sense::kLessEqual, 1.0), ConfigError);
}

TEST_CASE("subsample") {
  Rng rng = make_rng(1, "subsample-unit");
  const Dataset d = random_instance(rng, 30, 2, 2);
  const Dataset all = subsample(d, 30, 7);
  CHECK(all.y() == d.y());
  CHECK(all.x() == d.x());

  const Dataset one_a = subsample(d, 1, 99), one_b = subsample(d, 1, 99);
  CHECK(one_a.n() == 1);
  CHECK(one_a.y() == one_b.y());

  std::set<std::vector<double>> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Dataset h = subsample(d, 15, s);
    CHECK(h.n() == 15);
    seen.insert(std::vector<double>(h.y().data(), h.y().data() + h.n()));
    // Original order: the selected rows appear in increasing row index.
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < h.n(); ++i) {
      Eigen::Index pos = 0;
      while (d.y()(pos) != h.y()(i)) ++pos;
      CHECK(pos > last);
      last = pos;
    }
  }
  CHECK(seen.size() == 200);
  CHECK_THROWS_AS(subsample(d, 31, 1), ConfigError);
  CHECK_THROWS_AS(subsample(d, 0, 1), ConfigError);
}

TEST_CASE("solve_ivqr: early stop is certified and heuristic helps") {
  Rng rng = make_rng(12, "solve-ivqr");
  const Dataset d = random_instance(rng, 60, 3, 3);
  IvqrSolveOptions opt;
  opt.start = Eigen::VectorXd::Constant(3, 0.7);
  const IvqrSolveResult r = solve_ivqr(d, 0.5, opt);
  REQUIRE(r.solution.has_incumbent());
  CHECK(r.solution.termination == Termination::kEarlyStopQstar);
  CHECK(r.moment_sup_norm <= r.rule.q_star + 1e-9);

  const Eigen::VectorXd searched = coordinate_search(d, 0.5, r.box, Eigen::VectorXd::Constant(3, 0.7));
  const MomentModel model(std::make_shared<const Dataset>(d), QuantileSpec(0.5));
  CHECK(model.sup_norm(searched) <= model.sup_norm(Eigen::VectorXd::Constant(3, 0.7)));
}

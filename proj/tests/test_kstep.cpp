#include "doctest.h"

#include <cmath>
#include <memory>

#include "ivqr/common/error.hpp"
#include "ivqr/common/rng.hpp"
#include "ivqr/jacobian/jacobian.hpp"
#include "ivqr/kstep/operator.hpp"
#include "ivqr/kstep/pipeline.hpp"
#include "ivqr/simlab/contraction.hpp"
#include "ivqr/simlab/dgp.hpp"

using namespace ivqr;
using namespace ivqr::kstep;

namespace {

// G_n(v) = A (v − c).
MomentModel affine_family(const Eigen::MatrixXd& a, const Eigen::VectorXd& c) {
  return MomentModel::custom([a, c](const Eigen::VectorXd& v) { return (a * (v - c)).eval(); }, a.cols(), a.rows());
}

// Exogenous median regression: Y = 1 + 2X + U, Z = X = (1, x).
std::shared_ptr<const Dataset> exogenous_data(Eigen::Index n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "kstep-test");
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = uniform_open(rng) * 2.0;
    y(i) = 1.0 + 2.0 * x(i, 1) + standard_normal(rng);
  }
  return std::make_shared<const Dataset>(y, x, x);
}

}  // namespace

TEST_CASE("default_iterations") {
  CHECK(default_iterations(1) == 1);
  CHECK(default_iterations(2000) == 1 + 16);  // 2 ln 2000 = 15.2
  CHECK(default_iterations(100) == 1 + 10);   // 2 ln 100 = 9.21
  CHECK_THROWS_AS(default_iterations(0), ConfigError);
}

TEST_CASE("one_step examples") {
  Eigen::VectorXd c(2);
  c << 0.7, -1.2;
  const MomentModel linear = affine_family(Eigen::MatrixXd::Identity(2, 2), c);
  const JacobianMatrix q{Eigen::MatrixXd::Identity(2, 2)};
  for (double s : {-3.0, 0.0, 5.5}) {
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(2, s);
    CHECK((one_step(v, q, linear) - c).norm() == doctest::Approx(0.0));
  }

  // p=1, L=2, Q=(1,1)', G_n(v)=(v, v)' at v=2 → 0.
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 1);
  const MomentModel doubled = affine_family(ones, Eigen::VectorXd::Zero(1));
  CHECK(std::abs(one_step(Eigen::VectorXd::Constant(1, 2.0), JacobianMatrix{ones}, doubled)(0)) <= 1e-15);

  // Fixed point when Q'G_n(v) = 0.
  const auto orth = MomentModel::custom(
      [](const Eigen::VectorXd&) {
        Eigen::VectorXd g(2);
        g << 1.0, -1.0;
        return g;
      },
      1, 2);
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, 3.25);
  CHECK(one_step(v, JacobianMatrix{ones}, orth)(0) == 3.25);
}

TEST_CASE("affine family lands in one step from any start") {
  Rng rng = make_rng(2, "affine");
  Eigen::MatrixXd a(4, 3);
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index k = 0; k < 3; ++k) a(j, k) = standard_normal(rng);
  Eigen::VectorXd b(3);
  b << 1.0, -2.0, 0.5;
  const MomentModel model = affine_family(a, b);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd v(3);
    for (Eigen::Index k = 0; k < 3; ++k) v(k) = 10.0 * standard_normal(rng);
    CHECK((one_step(v, JacobianMatrix{a}, model) - b).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("singular Q'Q is rejected") {
  Eigen::MatrixXd q(3, 2);
  q << 1, 2, 2, 4, 3, 6;
  const MomentModel model = affine_family(q, Eigen::VectorXd::Zero(2));
  try {
    one_step(Eigen::VectorXd::Zero(2), JacobianMatrix{q}, model);
    FAIL("expected SingularJacobianError");
  } catch (const SingularJacobianError& e) {
    CHECK(e.kind() == "singular-jacobian");
    CHECK(e.lambda_min() <= 1e-10 * 70.0);
  }
  try {
    iterate(Eigen::VectorXd::Zero(2), JacobianMatrix{q}, model, {3, true});
    FAIL("expected SingularJacobianError");
  } catch (const SingularJacobianError& e) {
    CHECK(e.iteration() == 1);
  }
}

TEST_CASE("iterate: K=1 equals one_step and linear families are idempotent") {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 0.5, -1.0, 1.5;
  Eigen::VectorXd c(2);
  c << 0.3, 0.9;
  const MomentModel model = affine_family(a, c);
  const Eigen::VectorXd v0 = Eigen::VectorXd::Constant(2, 4.0);
  const JacobianMatrix q{a};
  const auto one = iterate(v0, q, model, {1, true});
  CHECK(one.final_iterate == one_step(v0, q, model));
  CHECK(one.trace.entries.size() == 2);

  const auto many = iterate(v0, q, model, {6, true});
  CHECK(many.trace.entries.size() == 7);
  for (std::size_t k = 1; k < many.trace.entries.size(); ++k) {
    CHECK((many.trace.entries[k].iterate - c).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(many.trace.entries[0].iterate == v0);
  const auto quiet = iterate(v0, q, model, {6, false});
  CHECK(quiet.trace.entries.empty());
  CHECK(quiet.final_iterate == many.final_iterate);
  CHECK_THROWS_AS(iterate(v0, q, model, {0, true}), ConfigError);
}

TEST_CASE("iterate stops once stationary on piecewise-constant moments") {
  const auto data = exogenous_data(500, 3);
  const MomentModel model(data, QuantileSpec(0.5));
  Eigen::MatrixXd q(2, 2);
  q << 0.4, 0.4, 0.4, 0.55;
  const auto r = iterate(Eigen::VectorXd::Zero(2), JacobianMatrix{q}, model, {40, true});
  CHECK(r.trace.entries.size() == 41);
  CHECK(r.evaluated_steps <= 40);
  const auto longer = iterate(Eigen::VectorXd::Zero(2), JacobianMatrix{q}, model, {60, true});
  // Piecewise-constant moments can also cycle; only a repeat is final.
  if (r.evaluated_steps < 40) {
    CHECK(longer.final_iterate == r.final_iterate);
    CHECK(longer.evaluated_steps == r.evaluated_steps);
  }
}

TEST_CASE("contraction family: error decays to the floor") {
  simlab::ContractionSpec spec;
  spec.seed = 17;
  const auto fam = simlab::make_contraction_family(spec);
  CHECK(fam.rho_star < 0.5);
  CHECK(fam.rho_star == doctest::Approx(0.3).epsilon(1e-6));
  Rng rng = make_rng(17, "contraction-starts");
  for (int s = 0; s < 20; ++s) {
    const Eigen::VectorXd v0 = simlab::draw_start_in_ball(fam, rng);
    const auto r = iterate(v0, fam.q, fam.model, {12, true});
    for (std::size_t k = 0; k + 1 < r.trace.entries.size(); ++k) {
      const double ek = (r.trace.entries[k].iterate - fam.beta_star).norm();
      const double ek1 = (r.trace.entries[k + 1].iterate - fam.beta_star).norm();
      CHECK(ek1 <= 0.75 * ek + fam.floor);
    }
  }
}

TEST_CASE("run_pipeline on exogenous median regression") {
  const auto data = exogenous_data(1500, 9);
  const MomentModel model(data, QuantileSpec(0.5));
  Eigen::VectorXd start(2);
  start << 0.7, 2.3;
  const JacobianMatrix gamma0{jacobian::kernel_jacobian_baseline(model, start).gamma};

  PipelineConfig cfg;
  cfg.jacobian.scheme.seed = 123;
  cfg.rectangle_seed = 321;
  cfg.rectangle_draws = 20000;
  cfg.targets = {{"slope", {1}}};
  const InferenceReport rep = run_pipeline(model, start, gamma0, cfg);

  CHECK(rep.k_iterations == default_iterations(1500));
  CHECK(rep.trace_first.entries.size() == static_cast<std::size_t>(rep.k_iterations) + 1);
  CHECK(rep.trace_second.entries.size() == static_cast<std::size_t>(rep.k_iterations) + 1);
  CHECK(rep.jacobian_draws == jacobian::default_draws(1500));
  CHECK(rep.beta_tilde(0) == doctest::Approx(1.0).epsilon(0.3));
  CHECK(rep.beta_tilde(1) == doctest::Approx(2.0).epsilon(0.15));
  REQUIRE(rep.intervals.size() == 2);
  for (Eigen::Index k = 0; k < 2; ++k) {
    const auto& i95 = rep.intervals[0].intervals[static_cast<std::size_t>(k)];
    const auto& i90 = rep.intervals[1].intervals[static_cast<std::size_t>(k)];
    CHECK(i95.lower <= i90.lower);
    CHECK(i90.upper <= i95.upper);
  }
  // full and slope at two levels.
  REQUIRE(rep.joint.size() == 4);
  CHECK(rep.joint[0].target == "full");
  CHECK(rep.joint[2].target == "slope");
  CHECK(rep.joint[0].wald_critical_value.has_value());
  CHECK(rep.rectangle_covers(rep.joint[0], rep.beta_tilde));

  // Same inputs, same bits.
  const InferenceReport again = run_pipeline(model, start, gamma0, cfg);
  CHECK(again.beta_tilde == rep.beta_tilde);
  CHECK(again.covariance.v == rep.covariance.v);

  // A perturbed initial Jacobian changes β̃ by much less than a standard error.
  JacobianMatrix perturbed = gamma0;
  perturbed.gamma(0, 1) += 0.02;
  const InferenceReport other = run_pipeline(model, start, perturbed, cfg);
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double se = std::sqrt(rep.covariance.v(k, k) / 1500.0);
    CHECK(std::abs(other.beta_tilde(k) - rep.beta_tilde(k)) <= 0.5 * se);
  }
}

TEST_CASE("run_pipeline validates shapes") {
  const auto data = exogenous_data(50, 1);
  const MomentModel model(data, QuantileSpec(0.5));
  PipelineConfig cfg;
  CHECK_THROWS_AS(run_pipeline(model, Eigen::VectorXd::Zero(3), JacobianMatrix{Eigen::MatrixXd::Identity(2, 2)}, cfg),
                  ConfigError);
  CHECK_THROWS_AS(run_pipeline(model, Eigen::VectorXd::Zero(2), JacobianMatrix{Eigen::MatrixXd::Identity(3, 2)}, cfg),
                  ConfigError);
}

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <memory>

#include "ivqr/estimator.hpp"
#include "ivqr/inference/inference.hpp"
#include "ivqr/jacobian/jacobian.hpp"
#include "ivqr/kstep/operator.hpp"
#include "ivqr/milp/builders.hpp"
#include "ivqr/milp/simplex.hpp"
#include "ivqr/simlab/dgp.hpp"

using namespace ivqr;

namespace {

std::shared_ptr<const Dataset> jtpa(Eigen::Index n, int q = 1) {
  return std::make_shared<const Dataset>(simlab::generate_jtpa_like({q, n, 1}));
}

void BM_SampleMoment(benchmark::State& state) {
  const MomentModel model(jtpa(state.range(0), 3), QuantileSpec(0.5));
  const Eigen::VectorXd beta = simlab::jtpa_beta(3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(model.sample_moment(beta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleMoment)->Arg(2000)->Arg(20000);

void BM_RootRelaxation(benchmark::State& state) {
  const auto data = jtpa(state.range(0));
  const auto box = milp::default_box(*data);
  const double m = milp::choose_big_m(*data, box);
  const auto built = milp::build_ivqr_milp(*data, 0.5, m, box, milp::default_wedge(m));
  for (auto _ : state) benchmark::DoNotOptimize(milp::solve_lp(built.problem));
}
BENCHMARK(BM_RootRelaxation)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_TuningFreeJacobian(benchmark::State& state) {
  const MomentModel model(jtpa(state.range(0)), QuantileSpec(0.5));
  const Eigen::VectorXd beta = simlab::jtpa_beta(1, 0.5);
  jacobian::JacobianOptions options;
  options.scheme.draws = jacobian::default_draws(model.n());
  for (auto _ : state) benchmark::DoNotOptimize(jacobian::estimate_jacobian(model, beta, options));
}
BENCHMARK(BM_TuningFreeJacobian)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KStep(benchmark::State& state) {
  const MomentModel model(jtpa(state.range(0)), QuantileSpec(0.5));
  const Eigen::VectorXd beta = simlab::jtpa_beta(1, 0.5);
  const JacobianMatrix q = jacobian::kernel_jacobian_baseline(model, beta);
  const int k = kstep::default_iterations(model.n());
  for (auto _ : state) benchmark::DoNotOptimize(kstep::iterate(beta, q, model, {k, false}));
}
BENCHMARK(BM_KStep)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_RectangleCritical(benchmark::State& state) {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(state.range(0), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(inference::rectangle_critical_value(v, 0.05, 100000, 3));
}
BENCHMARK(BM_RectangleCritical)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_EstimateDemoScale(benchmark::State& state) {
  const auto data = jtpa(200);
  EstimatorConfig config;
  config.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_ivqr(*data, 0.5, config));
}
BENCHMARK(BM_EstimateDemoScale)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

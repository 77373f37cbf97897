#include "ivqr/estimator.hpp"

#include <memory>

#include "ivqr/common/error.hpp"
#include "ivqr/common/rng.hpp"
#include "ivqr/core_model/moment.hpp"
#include "ivqr/milp/builders.hpp"

namespace ivqr {

EstimatorSeeds derive_estimator_seeds(std::uint64_t master) {
  return {derive_seed(master, "milp-subsample"), derive_seed(master, "milp-start"),
          derive_seed(master, "jacobian-initial"), derive_seed(master, "jacobian"), derive_seed(master, "rectangle")};
}

EstimatorResult estimate_ivqr(const Dataset& data, double tau, const EstimatorConfig& config) {
  EstimatorResult out;
  out.seeds = derive_estimator_seeds(config.seed);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();

  const Eigen::Index m = config.subsample ? std::min(*config.subsample, n) : n;
  const Dataset sub = m < n ? milp::subsample(data, m, out.seeds.subsample) : data;
  out.subsample_size = sub.n();

  if (config.start) {
    if (config.start->size() != p) throw ConfigError("start vector has the wrong length", "dimension");
    out.start = *config.start;
  } else {
    Rng rng(out.seeds.start);
    out.start.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) out.start(k) = standard_normal(rng);
  }

  milp::IvqrSolveOptions sopt;
  sopt.box = config.box;
  sopt.big_m = config.big_m;
  sopt.early_stop = config.early_stop;
  sopt.limits = config.limits;
  sopt.start = out.start;
  if (sub.n() >= 2) {
    out.initial = milp::solve_ivqr(sub, tau, sopt);
  }
  Eigen::VectorXd beta_bar;
  if (out.initial.solution.has_incumbent()) {
    beta_bar = out.initial.beta;
  } else {
    const milp::ParameterBox box = config.box ? *config.box : milp::default_box(sub);
    beta_bar = out.start.cwiseMax(box.lower).cwiseMin(box.upper);
    out.warnings.push_back("MILP found no incumbent; the clipped start vector is used as the initial estimate");
  }

  const auto shared = std::make_shared<const Dataset>(data);
  const MomentModel model(shared, QuantileSpec(tau));

  jacobian::JacobianOptions jinit = config.pipeline.jacobian;
  if (jinit.scheme.draws <= 0) jinit.scheme.draws = jacobian::default_draws(n);
  jinit.scheme.seed = out.seeds.jacobian_initial;
  out.gamma_initial = jacobian::estimate_jacobian(model, beta_bar, jinit);
  for (const auto& w : out.gamma_initial.warnings) out.warnings.push_back("initial Jacobian: " + w);

  kstep::PipelineConfig pconf = config.pipeline;
  pconf.jacobian.scheme.seed = out.seeds.jacobian;
  pconf.rectangle_seed = out.seeds.rectangle;
  out.report = kstep::run_pipeline(model, beta_bar, out.gamma_initial.matrix, pconf);
  return out;
}

}  // namespace ivqr

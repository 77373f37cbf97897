#include "ivqr/kstep/pipeline.hpp"

#include <cmath>

#include "ivqr/common/distributions.hpp"
#include "ivqr/common/error.hpp"

namespace ivqr::kstep {

namespace {

double sup_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<Eigen::Index>& idx) {
  double m = 0.0;
  for (auto k : idx) m = std::max(m, std::abs(a(k) - b(k)));
  return m;
}

}  // namespace

bool InferenceReport::rectangle_covers(const JointResult& j, const Eigen::VectorXd& b) const {
  return std::sqrt(static_cast<double>(n)) * sup_distance(beta_tilde, b, j.coordinates) <= j.rectangle_critical_value;
}

bool InferenceReport::ellipsoid_covers(const JointResult& j, const Eigen::VectorXd& b) const {
  if (!j.wald_critical_value) return false;
  const auto test = inference::wald_test(beta_tilde, b, covariance.v, n, j.alpha, j.coordinates);
  return !test.reject;
}

InferenceReport run_pipeline(const MomentModel& model, const Eigen::VectorXd& initial_beta,
                             const JacobianMatrix& initial_gamma, const PipelineConfig& config) {
  const Eigen::Index n = model.n();
  const Eigen::Index p = model.p();
  if (initial_beta.size() != p) throw ConfigError("initial beta has wrong length");
  if (initial_gamma.gamma.rows() != model.L() || initial_gamma.gamma.cols() != p) {
    throw ConfigError("initial Jacobian must be L×p");
  }

  InferenceReport report;
  report.n = n;
  report.beta_initial = initial_beta;
  report.gamma_initial = initial_gamma;
  report.k_iterations = config.k_iterations ? *config.k_iterations : default_iterations(n);
  const KStepConfig kconf{report.k_iterations, config.trace_enabled};

  IterationResult first = iterate(initial_beta, initial_gamma, model, kconf);
  report.beta_hat = first.final_iterate;
  report.trace_first = std::move(first.trace);

  jacobian::JacobianOptions jopts = config.jacobian;
  if (jopts.scheme.draws <= 0) jopts.scheme.draws = jacobian::default_draws(n);
  report.jacobian_seed = jopts.scheme.seed;
  report.jacobian_draws = jopts.scheme.draws;
  report.gamma_tilde = jacobian::estimate_jacobian(model, report.beta_hat, jopts);
  for (const auto& w : report.gamma_tilde.warnings) report.warnings.push_back(w);

  IterationResult second;
  try {
    second = iterate(report.beta_hat, report.gamma_tilde.matrix, model, kconf);
  } catch (const SingularJacobianError& e) {
    throw SingularJacobianError(e.lambda_min(), e.iteration(),
                                std::string("re-estimated Jacobian: ") + e.what());
  }
  report.beta_tilde = second.final_iterate;
  report.trace_second = std::move(second.trace);

  report.covariance = inference::estimate_covariance(model, report.beta_tilde, report.gamma_tilde.matrix);
  const Eigen::MatrixXd& v = report.covariance.v;
  report.variance_singular = !inference::is_invertible(v);
  if (report.variance_singular) {
    report.warnings.push_back("variance estimate is singular; Wald inference unavailable, rectangle sets reported");
  }

  for (double alpha : config.alphas) {
    report.intervals.push_back({alpha, inference::confidence_intervals(report.beta_tilde, v, n, alpha)});
  }

  std::vector<InferenceTarget> targets;
  InferenceTarget full{"full", {}};
  for (Eigen::Index k = 0; k < p; ++k) full.coordinates.push_back(k);
  targets.push_back(full);
  for (const auto& t : config.targets) {
    if (t.name != "full") targets.push_back(t);
  }
  std::vector<std::vector<Eigen::Index>> coords;
  for (const auto& t : targets) coords.push_back(t.coordinates);
  report.rectangle_seed = config.rectangle_seed;
  const auto crit = inference::rectangle_critical_values(v, coords, config.alphas, config.rectangle_draws,
                                                         config.rectangle_seed, config.jacobian.threads);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t a = 0; a < config.alphas.size(); ++a) {
      JointResult jr;
      jr.target = targets[t].name;
      jr.coordinates = targets[t].coordinates;
      jr.alpha = config.alphas[a];
      jr.rectangle_critical_value = crit[t][a];
      if (!report.variance_singular) {
        jr.wald_critical_value =
            chi_squared_upper_quantile(static_cast<double>(jr.coordinates.size()), jr.alpha);
      }
      report.joint.push_back(std::move(jr));
    }
  }
  return report;
}

}  // namespace ivqr::kstep

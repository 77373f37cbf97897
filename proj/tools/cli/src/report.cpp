#include "report.hpp"

#include <cmath>

#include "ivqr/cli/app.hpp"
#include "ivqr/common/error.hpp"
#include "ivqr/inference/inference.hpp"

namespace ivqr::cli {

namespace {

std::vector<std::string> names_of(const std::vector<Eigen::Index>& coordinates, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (Eigen::Index k : coordinates) out.push_back(names.at(static_cast<std::size_t>(k)));
  return out;
}

json test_json(const inference::TestResult& t) {
  return {{"kind", inference::test_kind_name(t.kind)},
          {"statistic", t.statistic},
          {"critical_value", t.critical_value},
          {"alpha", t.alpha},
          {"reject", t.reject}};
}

}  // namespace

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

json trace_json(const kstep::IterationTrace& trace) {
  json out = json::array();
  for (const auto& e : trace.entries) {
    out.push_back({{"iterate", vector_json(e.iterate)}, {"moment_sup_norm", e.moment_sup_norm}});
  }
  return out;
}

json jacobian_json(const jacobian::JacobianEstimate& estimate, const std::vector<std::string>& z_names,
                   const std::vector<std::string>& x_names) {
  const Eigen::MatrixXd& g = estimate.matrix.gamma;
  json entries = json::array();
  for (Eigen::Index j = 0; j < g.rows(); ++j) {
    for (Eigen::Index k = 0; k < g.cols(); ++k) {
      const auto& d = estimate.entry(j, k);
      entries.push_back({{"row", j},
                         {"column", k},
                         {"instrument", z_names.at(static_cast<std::size_t>(j))},
                         {"regressor", x_names.at(static_cast<std::size_t>(k))},
                         {"value", g(j, k)},
                         {"draws", d.draws},
                         {"numerator", d.numerator},
                         {"denominator", d.denominator},
                         {"draw_se", d.draw_se},
                         {"window", d.window},
                         {"flagged", d.flagged},
                         {"max_residual", d.max_residual},
                         {"estimable", d.estimable}});
    }
  }
  return {{"matrix", matrix_json(g)}, {"entries", entries}, {"warnings", estimate.warnings}};
}

json solver_json(const EstimatorResult& r) {
  const auto& s = r.initial.solution;
  json box = nullptr;
  if (r.initial.box.size() > 0) box = {{"lower", vector_json(r.initial.box.lower)}, {"upper", vector_json(r.initial.box.upper)}};
  return {{"subsample_size", r.subsample_size},
          {"start", vector_json(r.start)},
          {"termination", milp::termination_name(s.termination)},
          {"has_incumbent", s.has_incumbent()},
          {"beta", vector_json(r.initial.beta)},
          {"objective", s.objective},
          {"best_bound", s.best_bound},
          {"gap", s.gap},
          {"nodes", s.nodes},
          {"lp_iterations", s.lp_iterations},
          {"q_star", r.initial.rule.q_star},
          {"early_stop", r.initial.rule.enabled},
          {"moment_sup_norm", r.initial.moment_sup_norm},
          {"big_m", r.initial.big_m},
          {"wedge", r.initial.wedge},
          {"box", box}};
}

json inference_json(const kstep::InferenceReport& rep, const std::vector<std::string>& x_names) {
  const Eigen::Index n = rep.n;
  const Eigen::Index p = rep.beta_tilde.size();
  json coefficients = json::array();
  for (Eigen::Index k = 0; k < p; ++k) {
    json intervals = json::array();
    for (const auto& level : rep.intervals) {
      const auto& iv = level.intervals.at(static_cast<std::size_t>(k));
      intervals.push_back({{"alpha", level.alpha}, {"lower", iv.lower}, {"upper", iv.upper}});
    }
    const double var = rep.covariance.v(k, k);
    coefficients.push_back({{"name", x_names.at(static_cast<std::size_t>(k))},
                            {"estimate", rep.beta_tilde(k)},
                            {"se", var >= 0.0 ? json(std::sqrt(var / static_cast<double>(n))) : json(nullptr)},
                            {"intervals", intervals}});
  }

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
  json joint = json::array();
  for (const auto& jr : rep.joint) {
    json tests = {{"rectangle", test_json(inference::rectangle_test(rep.beta_tilde, zero, n, jr.alpha,
                                                                     jr.rectangle_critical_value, jr.coordinates))},
                  {"wald", nullptr}};
    if (jr.wald_critical_value) {
      try {
        tests["wald"] = test_json(inference::wald_test(rep.beta_tilde, zero, rep.covariance.v, n, jr.alpha, jr.coordinates));
      } catch (const NumericalError&) {
        // Block of V̂ singular; the rectangle test stands alone.
      }
    }
    joint.push_back({{"target", jr.target},
                     {"coordinates", names_of(jr.coordinates, x_names)},
                     {"alpha", jr.alpha},
                     {"rectangle_critical_value", jr.rectangle_critical_value},
                     {"wald_critical_value", jr.wald_critical_value ? json(*jr.wald_critical_value) : json(nullptr)},
                     {"tests_at_zero", tests}});
  }

  return {{"n", n},
          {"k", rep.k_iterations},
          {"beta_initial", vector_json(rep.beta_initial)},
          {"beta_hat", vector_json(rep.beta_hat)},
          {"beta_tilde", vector_json(rep.beta_tilde)},
          {"coefficients", coefficients},
          {"covariance", {{"omega", matrix_json(rep.covariance.omega)}, {"v", matrix_json(rep.covariance.v)}}},
          {"variance_singular", rep.variance_singular},
          {"joint", joint},
          {"jacobian_draws", rep.jacobian_draws},
          {"traces", {{"first", trace_json(rep.trace_first)}, {"second", trace_json(rep.trace_second)}}}};
}

json envelope(const std::string& command, const json& config_echo) {
  return {{"schema_version", kReportSchemaVersion},
          {"tool", {{"name", "ivqr"}, {"version", tool_version()}}},
          {"command", command},
          {"config", config_echo}};
}

}  // namespace ivqr::cli

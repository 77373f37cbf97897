#include "ivqr/kstep/operator.hpp"

#include <cmath>
#include <sstream>

#include "ivqr/common/error.hpp"

namespace ivqr::kstep {

int default_iterations(Eigen::Index n) {
  if (n < 1) throw ConfigError("sample size must be positive");
  return 1 + static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(n))));
}

CorrectionOperator::CorrectionOperator(const JacobianMatrix& q) : q_(q.gamma), p_(q.gamma.cols()) {
  const Eigen::MatrixXd& gamma = q.gamma;
  if (gamma.rows() < gamma.cols() || gamma.cols() < 1) {
    throw ConfigError("Jacobian must be L×p with L >= p >= 1");
  }
  if (!gamma.allFinite()) {
    throw SingularJacobianError(std::nan(""), 0, "Jacobian contains non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gamma.transpose() * gamma, Eigen::EigenvaluesOnly);
  lambda_min_ = eig.eigenvalues().minCoeff();
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (!(lambda_max > 0.0) || lambda_min_ <= kSingularityRatio * lambda_max) {
    std::ostringstream msg;
    msg << "Q'Q is numerically singular (lambda_min = " << lambda_min_ << ", lambda_max = " << lambda_max
        << ")";
    throw SingularJacobianError(lambda_min_, 0, msg.str());
  }
  qr_.compute(gamma);
}

Eigen::VectorXd CorrectionOperator::project(const Eigen::VectorXd& g) const {
  // Least-squares solution of Q δ = g, i.e. (Q'Q)⁻¹Q'g for full column rank Q.
  // The QR path leaves rounding noise where Q'g vanishes exactly; keep fixed
  // points exact.
  if ((q_.transpose() * g).isZero(0.0)) return Eigen::VectorXd::Zero(p_);
  return qr_.solve(g).head(p_);
}

Eigen::VectorXd CorrectionOperator::apply(const Eigen::VectorXd& v, const MomentModel& model) const {
  return v - project(model.sample_moment(v));
}

Eigen::VectorXd one_step(const Eigen::VectorXd& v, const JacobianMatrix& q, const MomentModel& model) {
  return CorrectionOperator(q).apply(v, model);
}

IterationResult iterate(const Eigen::VectorXd& v0, const JacobianMatrix& q, const MomentModel& model,
                        const KStepConfig& config) {
  if (config.k_iterations < 1) throw ConfigError("k_iterations must be at least 1");
  if (!v0.allFinite()) throw NumericalError("starting point is not finite", "non-finite");

  const CorrectionOperator op = [&] {
    try {
      return CorrectionOperator(q);
    } catch (const SingularJacobianError& e) {
      throw SingularJacobianError(e.lambda_min(), 1, std::string(e.what()) + " at iteration 1");
    }
  }();

  IterationResult result;
  if (config.trace_enabled) {
    result.trace.entries.reserve(static_cast<std::size_t>(config.k_iterations) + 1);
    result.trace.entries.push_back({v0, model.sup_norm(v0)});
  }
  Eigen::VectorXd current = v0;
  for (int k = 1; k <= config.k_iterations; ++k) {
    Eigen::VectorXd next = op.apply(current, model);
    if (!next.allFinite()) {
      throw NumericalError("iterate " + std::to_string(k) + " is not finite", "non-finite");
    }
    result.evaluated_steps = k;
    const bool stationary = (next.array() == current.array()).all();
    current = std::move(next);
    if (config.trace_enabled) result.trace.entries.push_back({current, model.sup_norm(current)});
    if (stationary) {
      if (config.trace_enabled) {
        while (static_cast<int>(result.trace.entries.size()) < config.k_iterations + 1) {
          result.trace.entries.push_back(result.trace.entries.back());
        }
      }
      break;
    }
  }
  result.final_iterate = current;
  return result;
}

}  // namespace ivqr::kstep

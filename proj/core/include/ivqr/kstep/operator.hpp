#pragma once

#include <Eigen/Dense>

#include <vector>

#include "ivqr/core_model/moment.hpp"

namespace ivqr {

/// L×p Jacobian of the population moment (or an estimate of it).
struct JacobianMatrix {
  Eigen::MatrixXd gamma;
};

namespace kstep {

/// Q'Q is treated as singular when λ_min ≤ kSingularityRatio · λ_max.
inline constexpr double kSingularityRatio = 1e-10;

/// 1 + ⌈2 ln n⌉.
int default_iterations(Eigen::Index n);

struct KStepConfig {
  int k_iterations = 1;
  bool trace_enabled = true;
};

struct TraceEntry {
  Eigen::VectorXd iterate;
  double moment_sup_norm = 0.0;
};

/// K+1 entries: the start followed by every iterate.
struct IterationTrace {
  std::vector<TraceEntry> entries;
};

/// The map v ↦ v − (Q'Q)⁻¹Q'G_n(v) for a fixed Q. Validates Q once and keeps
/// its QR factorization, so repeated application costs one moment evaluation
/// plus a triangular solve.
class CorrectionOperator {
 public:
  /// Throws SingularJacobianError when Q'Q is numerically singular.
  explicit CorrectionOperator(const JacobianMatrix& q);

  Eigen::VectorXd apply(const Eigen::VectorXd& v, const MomentModel& model) const;
  /// (Q'Q)⁻¹Q' g, computed through the QR factors.
  Eigen::VectorXd project(const Eigen::VectorXd& g) const;

  double lambda_min() const noexcept { return lambda_min_; }

 private:
  Eigen::MatrixXd q_;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
  Eigen::Index p_ = 0;
  double lambda_min_ = 0.0;
};

/// A(v, Q).
Eigen::VectorXd one_step(const Eigen::VectorXd& v, const JacobianMatrix& q, const MomentModel& model);

struct IterationResult {
  Eigen::VectorXd final_iterate;
  IterationTrace trace;
  /// Number of applications actually computed before the iterates became
  /// stationary (≤ K).
  int evaluated_steps = 0;
};

/// A_K(v0, Q). Stops early once an iterate repeats exactly; later iterates
/// are identical, so the trace is padded with copies.
IterationResult iterate(const Eigen::VectorXd& v0, const JacobianMatrix& q, const MomentModel& model,
                        const KStepConfig& config);

}  // namespace kstep
}  // namespace ivqr

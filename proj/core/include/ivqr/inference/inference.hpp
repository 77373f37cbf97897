#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivqr/core_model/moment.hpp"
#include "ivqr/kstep/operator.hpp"

namespace ivqr::inference {

inline constexpr int kDefaultRectangleDraws = 100000;

struct CovarianceEstimate {
  Eigen::MatrixXd omega;  // L×L
  Eigen::MatrixXd v;      // p×p
  JacobianMatrix gamma;
};

enum class TestKind { kWald, kRectangle, kT };
const char* test_kind_name(TestKind kind);

struct TestResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  double alpha = 0.05;
  bool reject = false;
  TestKind kind = TestKind::kWald;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double value) const noexcept { return lower <= value && value <= upper; }
};

/// n⁻¹ Σ g(W_i; β) g(W_i; β)'.
Eigen::MatrixXd estimate_omega(const MomentModel& model, const Eigen::VectorXd& beta);

/// (Γ'Γ)⁻¹ Γ'ΩΓ (Γ'Γ)⁻¹, symmetrized. Throws SingularJacobianError.
Eigen::MatrixXd asymptotic_variance(const JacobianMatrix& gamma, const Eigen::MatrixXd& omega);

CovarianceEstimate estimate_covariance(const MomentModel& model, const Eigen::VectorXd& beta,
                                       const JacobianMatrix& gamma);

/// Symmetric PSD square root. Eigenvalues down to −1e−8·max(1, λ_max) are
/// treated as zero; anything more negative throws NumericalError("not-psd").
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& v);

/// Whether v is numerically invertible (λ_min > 1e−12 · λ_max).
bool is_invertible(const Eigen::MatrixXd& v);

/// n (β̃ − β₀)' V⁻¹ (β̃ − β₀) against the χ²(p) upper-α quantile. With
/// `subset`, the test uses that block of coordinates only.
TestResult wald_test(const Eigen::VectorXd& beta_tilde, const Eigen::VectorXd& beta_null, const Eigen::MatrixXd& v,
                     Eigen::Index n, double alpha, const std::vector<Eigen::Index>& subset = {});

/// Empirical upper-α quantile of ‖V^{1/2} ξ‖∞, ξ ~ N(0, I_p), over S draws.
double rectangle_critical_value(const Eigen::MatrixXd& v, double alpha, int draws, std::uint64_t seed);

/// One simulation serving several coordinate subsets and levels:
/// result[t][a] is the critical value for targets[t] at alphas[a]. The
/// sup-norm for a subset is taken over those coordinates of V^{1/2} ξ.
std::vector<std::vector<double>> rectangle_critical_values(const Eigen::MatrixXd& v,
                                                           const std::vector<std::vector<Eigen::Index>>& targets,
                                                           const std::vector<double>& alphas, int draws,
                                                           std::uint64_t seed, int threads = 1);

/// √n ‖β̃_S − β₀_S‖∞ against a given critical value.
TestResult rectangle_test(const Eigen::VectorXd& beta_tilde, const Eigen::VectorXd& beta_null, Eigen::Index n,
                          double alpha, double critical_value, const std::vector<Eigen::Index>& subset = {});

/// β̃_k ± Φ⁻¹(1 − α/2) sqrt(V_kk / n).
std::vector<Interval> confidence_intervals(const Eigen::VectorXd& beta_tilde, const Eigen::MatrixXd& v,
                                           Eigen::Index n, double alpha);

}  // namespace ivqr::inference

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivqr/core_model/moment.hpp"
#include "ivqr/kstep/operator.hpp"

namespace ivqr::jacobian {

enum class SchemeKind {
  kBernoulli,    // ξ ∈ {0, 2} with equal probability
  kGaussian,     // ξ ~ N(1, 1)
  kMultinomial,  // multinomial(n; 1/n, ..., 1/n) counts: the empirical bootstrap
  kUnit,         // ξ ≡ 1; degenerate, for tests only
};

const char* scheme_name(SchemeKind kind);
SchemeKind parse_scheme(const std::string& name);

struct MultiplierScheme {
  SchemeKind kind = SchemeKind::kBernoulli;
  std::uint64_t seed = 0;
  int draws = 200;
};

/// max(200, ⌈√n⌉).
int default_draws(Eigen::Index n);

/// Multipliers for draw `index`. Each draw has its own stream, so draws can be
/// generated in any order or on any thread.
Eigen::VectorXd draw_multipliers(const MultiplierScheme& scheme, std::uint64_t index, Eigen::Index n);

struct ScalarRootProblem {
  Eigen::VectorXd ytilde;
  Eigen::VectorXd wtilde;
  double c = 0.0;
  double window = 0.0;  // half-width C̄
  double center = 0.0;  // b₀
};

struct ScalarRootSolution {
  double b_star = 0.0;
  /// |Σ 1{ỹ ≤ b*} w̃ − c|.
  double residual = 0.0;
  /// The chosen point is the outermost in-window candidate while thresholds
  /// exist beyond the window, i.e. a wider window might have done better.
  bool at_boundary = false;
};

/// Finds b in [b₀ − C̄, b₀ + C̄] making Σ 1{ỹ_i ≤ b} w̃_i as close to c as the
/// data allow. Candidates are b₀ itself and ỹ_g ± η for every distinct ỹ_g in
/// the window; the smallest realized residual wins, then the point closest to
/// b₀, then the lower point. Throws NumericalError("window") when no ỹ lies in
/// the window.
ScalarRootSolution solve_scalar_root(const ScalarRootProblem& problem);

/// Scalar form of entry (j, k) of the bootstrap equation for one multiplier
/// vector. Rows with X_ik = 0 (and censored rows with Y ≤ C) have indicators
/// that do not depend on b and are folded into c; the remaining rows carry
/// ỹ = r / X_ik and a sign-flipped weight when X_ik < 0.
ScalarRootProblem reduce_entry_to_scalar(const MomentModel& model, const Eigen::VectorXd& b0, Eigen::Index j,
                                         Eigen::Index k, const Eigen::VectorXd& xi,
                                         std::optional<double> window = std::nullopt);

/// Per-draw record for one Jacobian entry.
struct EntryDraws {
  std::vector<double> delta;     // b* − b₀_k
  std::vector<double> response;  // −n^{-1/2} H*_n(b*)
  std::vector<double> residual;  // realized root residual, in units of Σ ξ Z
  int flagged = 0;               // draws that hit the window boundary
};

struct EntryDiagnostics {
  int draws = 0;
  double numerator = 0.0;    // mean(response · δ)
  double denominator = 0.0;  // mean(δ²)
  double draw_se = 0.0;      // heteroskedasticity-robust SE of the through-origin slope
  double window = 0.0;
  int flagged = 0;
  double max_residual = 0.0;
  bool estimable = true;
};

struct JacobianOptions {
  MultiplierScheme scheme;
  /// C̄; when absent, 10 · 1.4826 · median|ỹ − b₀_k| per column.
  std::optional<double> window;
  /// Zero-fill non-estimable entries with a warning instead of throwing.
  bool permissive = false;
  int threads = 1;
  bool keep_draws = false;
};

struct JacobianEstimate {
  JacobianMatrix matrix;
  /// Row-major over (j, k): entries[j * p + k].
  std::vector<EntryDiagnostics> entries;
  /// Filled only when JacobianOptions::keep_draws is set.
  std::vector<EntryDraws> draws;
  std::vector<std::string> warnings;

  const EntryDiagnostics& entry(Eigen::Index j, Eigen::Index k) const {
    return entries[static_cast<std::size_t>(j * matrix.gamma.cols() + k)];
  }
};

struct EntryEstimate {
  double gamma = 0.0;
  EntryDiagnostics diagnostics;
  EntryDraws draws;
};

/// Γ̂_jk = mean(response · δ) / mean(δ²) over the scheme's draws.
EntryEstimate estimate_entry(const MomentModel& model, const Eigen::VectorXd& b0, Eigen::Index j, Eigen::Index k,
                             const JacobianOptions& options);

/// All L×p entries from one shared multiplier panel.
JacobianEstimate estimate_jacobian(const MomentModel& model, const Eigen::VectorXd& b0,
                                   const JacobianOptions& options);

struct DensityEstimate {
  double density = 0.0;
  double b0 = 0.0;
  double mean_scaled_square = 0.0;  // mean of n δ²
  int draws = 0;
};

/// sqrt(τ(1−τ) / mean(n (b* − b₀)²)) with b₀ the empirical τ-quantile.
DensityEstimate bootstrap_density(const Eigen::VectorXd& y, double tau, const MultiplierScheme& scheme,
                                  int threads = 1);

/// Gaussian-kernel plug-in n⁻¹ Σ K_h(Y − X'b₀) Z_ij X_ik with Silverman's
/// bandwidth on the residuals.
JacobianMatrix kernel_jacobian_baseline(const MomentModel& model, const Eigen::VectorXd& b0);

}  // namespace ivqr::jacobian

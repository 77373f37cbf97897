#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "ivqr/common/rng.hpp"
#include "ivqr/core_model/moment.hpp"
#include "ivqr/kstep/operator.hpp"

namespace ivqr::simlab {

/// Synthetic moment family with a known Jacobian:
///   G_n(v)_j = F_{n,j}(1/2 + (Γ*(v − β*))_j) − 1/2,
/// where F_{n,j} is the empirical CDF of n uniforms (argument clipped to
/// [0,1]). The population map is Γ*(v − β*) on the ball where every
/// |(Γ*(v − β*))_j| ≤ 1/2. The fixed matrix Q = Γ* + E is perturbed so that
/// ρ* = ‖I − (Q'Q)⁻¹Q'Γ*‖₂ hits the requested value.
struct ContractionSpec {
  Eigen::Index p = 3;
  Eigen::Index L = 4;
  Eigen::Index n = 20000;
  double rho_target = 0.3;
  std::uint64_t seed = 0;
};

struct ContractionFamily {
  Eigen::MatrixXd gamma_star;  // L×p
  Eigen::VectorXd beta_star;
  JacobianMatrix q;
  double rho_star = 0.0;
  /// ‖(Q'Q)⁻¹Q'‖₂ · √L · max_j sup|F_{n,j} − F|: a bound on the step error
  /// caused by sampling noise.
  double floor = 0.0;
  /// Euclidean radius around β* inside which the population map is linear.
  double radius = 0.0;
  MomentModel model;
};

/// Throws ConfigError for p < 1, L < p, n < 1 or ρ target outside (0, 1/2).
ContractionFamily make_contraction_family(const ContractionSpec& spec);

/// Uniform draw from the ball of radius `fraction · radius` around β*,
/// excluding β* itself.
Eigen::VectorXd draw_start_in_ball(const ContractionFamily& family, Rng& rng, double fraction = 1.0);

}  // namespace ivqr::simlab

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "ivqr/core_model/dataset.hpp"

namespace ivqr::simlab {

/// JTPA-style design with q exogenous covariates W. All structural
/// coefficients are 1; X = (1, D, W, D·W), Z = (1, S, W, S·W).
struct JtpaSpec {
  int q = 3;
  Eigen::Index n = 2000;
  std::uint64_t seed = 0;

  Eigen::Index p() const noexcept { return 2 * static_cast<Eigen::Index>(q) + 2; }
  /// Throws ConfigError for q < 1 or n < 1.
  void validate() const;
};

/// (S, D) cell probabilities for (1,1), (1,0), (0,0).
inline constexpr double kCellProbabilities[3] = {0.42, 0.25, 0.33};

/// Replication r draws from the stream make_rng(seed, "jtpa", r).
Dataset generate_jtpa_like(const JtpaSpec& spec, std::uint64_t replication = 0);

/// β(τ) = (1 + 2√3·q·c_τ, 1, 1 + c_τ, ..., 1 + c_τ) with c_τ = Φ⁻¹(τ).
Eigen::VectorXd jtpa_beta(int q, double tau);

/// Largest |P̂(Y ≤ X'β(τ) | S, D) − τ| over the three cells, from a fresh
/// sample of the given size.
double verify_conditional_quantile(const JtpaSpec& spec, double tau, Eigen::Index samples);

/// Scalar design Y = X + Zε, X = ZV with ε ~ Exp(λ) (mean 1/λ),
/// V ~ U(0,1), Z ~ U(0,2).
struct DerivativeSpec {
  double lambda = 1.0;
  Eigen::Index n = 400;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Replication r draws from make_rng(seed, "derivative", r).
Dataset generate_derivative_dgp(const DerivativeSpec& spec, std::uint64_t replication = 0);

/// E[Z 1{Y ≤ Xβ}] = 1 − (1 − e^{−a})/a with a = λ(β − 1), for β > 1.
double derivative_population_moment(double lambda, double beta);

/// d/dβ of the population moment: λ(1 − (1 + a)e^{−a})/a². Uses the power
/// series near a = 0. Throws ConfigError("domain") for β ≤ 1.
double true_gamma(double lambda, double beta);

enum class InstrumentChoice { kX, kLogX, kXLogX };
const char* instrument_choice_name(InstrumentChoice choice);
InstrumentChoice parse_instrument_choice(const std::string& name);

/// Y = X'θ + (X'γ)U with X ~ U(0,1)^p, U ~ U(0,1); θ and γ ~ U(0,1)^p are
/// redrawn for every replication.
struct EarlyStopSpec {
  Eigen::Index n = 100;
  Eigen::Index p = 5;
  InstrumentChoice instruments = InstrumentChoice::kX;
  double tau = 0.7;
  std::uint64_t seed = 0;
  void validate() const;
};

struct EarlyStopDraw {
  Dataset data;
  Eigen::VectorXd theta;
  Eigen::VectorXd gamma;
  /// MILP starting point, N(0, I_p).
  Eigen::VectorXd start;
};

EarlyStopDraw generate_early_stop_dgp(const EarlyStopSpec& spec, std::uint64_t replication = 0);

}  // namespace ivqr::simlab

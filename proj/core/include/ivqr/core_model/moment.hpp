#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>

#include "ivqr/core_model/dataset.hpp"

namespace ivqr {

enum class MomentFamily {
  kIvqr,          // z (1{y ≤ x'β} − τ)
  kIndicator,     // z 1{y ≤ x'β}; derivative/density experiments, no τ offset
  kCensoredIvqr,  // z (1{y ≤ max(x'β, c)} − τ)
  kCustom,        // caller-supplied sample moment (synthetic test families)
};

/// Sample moment G_n for a pluggable moment family. Immutable; copies share
/// the underlying dataset.
class MomentModel {
 public:
  using SampleFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd& beta)>;

  MomentModel(std::shared_ptr<const Dataset> data, QuantileSpec quantile,
              MomentFamily family = MomentFamily::kIvqr);

  /// Synthetic family: G_n(β) = fn(β). Only sample-level evaluation is
  /// available; `dimension` is L and `parameters` is p.
  static MomentModel custom(SampleFunction fn, Eigen::Index parameters, Eigen::Index dimension);

  MomentFamily family() const noexcept { return family_; }
  double tau() const noexcept { return tau_; }
  /// τ for IVQR families, 0 for the plain indicator family.
  double offset() const noexcept { return family_ == MomentFamily::kIndicator ? 0.0 : tau_; }
  Eigen::Index p() const noexcept { return p_; }
  Eigen::Index L() const noexcept { return L_; }
  Eigen::Index n() const;
  const Dataset& data() const;
  const std::shared_ptr<const Dataset>& data_ptr() const noexcept { return data_; }

  /// Whether observation i is "below" the fitted value at β (the indicator).
  bool indicator(Eigen::Index i, const Eigen::VectorXd& beta) const;

  /// g(W_i; β), length L.
  Eigen::VectorXd contribution(Eigen::Index i, const Eigen::VectorXd& beta) const;

  /// G_n(β) = n⁻¹ Σ_i g(W_i; β), summed left to right over i.
  Eigen::VectorXd sample_moment(const Eigen::VectorXd& beta) const;

  /// ‖G_n(β)‖_∞.
  double sup_norm(const Eigen::VectorXd& beta) const;

 private:
  MomentModel() = default;

  std::shared_ptr<const Dataset> data_;
  double tau_ = 0.5;
  MomentFamily family_ = MomentFamily::kIvqr;
  Eigen::Index p_ = 0;
  Eigen::Index L_ = 0;
  SampleFunction custom_;
};

// Free-function spellings of the core operations.
inline Eigen::VectorXd moment_contribution(const MomentModel& model, Eigen::Index i,
                                           const Eigen::VectorXd& beta) {
  return model.contribution(i, beta);
}
inline Eigen::VectorXd sample_moment(const MomentModel& model, const Eigen::VectorXd& beta) {
  return model.sample_moment(beta);
}
inline double moment_sup_norm(const MomentModel& model, const Eigen::VectorXd& beta) {
  return model.sup_norm(beta);
}

}  // namespace ivqr

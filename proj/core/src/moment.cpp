#include "ivqr/core_model/moment.hpp"

#include <algorithm>
#include <cmath>

#include "ivqr/common/error.hpp"

namespace ivqr {

MomentModel::MomentModel(std::shared_ptr<const Dataset> data, QuantileSpec quantile, MomentFamily family)
    : data_(std::move(data)), tau_(quantile.tau()), family_(family) {
  if (!data_) throw ConfigError("moment model requires a dataset");
  if (family_ == MomentFamily::kCustom) {
    throw ConfigError("use MomentModel::custom for synthetic families");
  }
  if (family_ == MomentFamily::kCensoredIvqr && !data_->censor()) {
    throw ConfigError("censored IVQR moments need censoring points", "censor");
  }
  p_ = data_->p();
  L_ = data_->L();
}

MomentModel MomentModel::custom(SampleFunction fn, Eigen::Index parameters, Eigen::Index dimension) {
  if (!fn) throw ConfigError("custom moment family needs a function");
  if (parameters < 1 || dimension < parameters) {
    throw ConfigError("custom moment family needs 1 <= p <= L");
  }
  MomentModel model;
  model.family_ = MomentFamily::kCustom;
  model.custom_ = std::move(fn);
  model.p_ = parameters;
  model.L_ = dimension;
  return model;
}

Eigen::Index MomentModel::n() const { return data_ ? data_->n() : 0; }

const Dataset& MomentModel::data() const {
  if (!data_) throw ConfigError("custom moment family has no dataset");
  return *data_;
}

namespace {

// Fixed left-to-right order so per-row and whole-sample paths agree bit for bit.
double fitted_value(const Eigen::MatrixXd& x, Eigen::Index i, const Eigen::VectorXd& beta) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) s += x(i, k) * beta(k);
  return s;
}

}  // namespace

bool MomentModel::indicator(Eigen::Index i, const Eigen::VectorXd& beta) const {
  const Dataset& d = data();
  const double fitted = fitted_value(d.x(), i, beta);
  if (family_ == MomentFamily::kCensoredIvqr) {
    return d.y()(i) <= std::max(fitted, (*d.censor())(i));
  }
  return d.y()(i) <= fitted;
}

Eigen::VectorXd MomentModel::contribution(Eigen::Index i, const Eigen::VectorXd& beta) const {
  if (family_ == MomentFamily::kCustom) {
    throw ConfigError("custom moment family has no per-observation contributions");
  }
  const double weight = (indicator(i, beta) ? 1.0 : 0.0) - offset();
  return data_->z().row(i).transpose() * weight;
}

Eigen::VectorXd MomentModel::sample_moment(const Eigen::VectorXd& beta) const {
  if (beta.size() != p_) throw ConfigError("parameter vector has wrong length");
  if (family_ == MomentFamily::kCustom) return custom_(beta);

  const Dataset& d = *data_;
  const Eigen::Index n = d.n();
  const Eigen::MatrixXd& z = d.z();
  const double off = offset();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(L_);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fitted = fitted_value(d.x(), i, beta);
    bool below;
    if (family_ == MomentFamily::kCensoredIvqr) {
      below = d.y()(i) <= std::max(fitted, (*d.censor())(i));
    } else {
      below = d.y()(i) <= fitted;
    }
    const double w = (below ? 1.0 : 0.0) - off;
    for (Eigen::Index j = 0; j < L_; ++j) acc(j) += z(i, j) * w;
  }
  return acc / static_cast<double>(n);
}

double MomentModel::sup_norm(const Eigen::VectorXd& beta) const {
  return sample_moment(beta).cwiseAbs().maxCoeff();
}

}  // namespace ivqr

#include "ivqr/simlab/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "ivqr/common/error.hpp"

namespace ivqr::simlab {

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

Eigen::MatrixXd projector(const Eigen::MatrixXd& q) {
  return (q.transpose() * q).ldlt().solve(q.transpose());
}

double rho_of(const Eigen::MatrixXd& q, const Eigen::MatrixXd& gamma) {
  const Eigen::Index p = gamma.cols();
  return spectral_norm(Eigen::MatrixXd::Identity(p, p) - projector(q) * gamma);
}

Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = standard_normal(rng);
  }
  return m;
}

}  // namespace

ContractionFamily make_contraction_family(const ContractionSpec& spec) {
  if (spec.p < 1 || spec.L < spec.p) throw ConfigError("need 1 <= p <= L", "dimension");
  if (spec.n < 1) throw ConfigError("n must be at least 1", "n");
  if (!(spec.rho_target > 0.0 && spec.rho_target < 0.5)) throw ConfigError("rho target must lie in (0, 1/2)", "rho");
  const Eigen::Index p = spec.p, L = spec.L, n = spec.n;
  Rng rng = make_rng(spec.seed, "contraction");

  Eigen::MatrixXd gamma;
  for (;;) {
    gamma = normal_matrix(rng, L, p);
    const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(gamma).singularValues();
    if (sv(p - 1) > 0.25 * sv(0)) break;
  }
  Eigen::VectorXd beta_star(p);
  for (Eigen::Index k = 0; k < p; ++k) beta_star(k) = standard_normal(rng);

  // ρ(s) for Q = Γ* + sE grows from 0; bracket the target and bisect.
  const Eigen::MatrixXd e = normal_matrix(rng, L, p);
  double lo = 0.0, hi = 0.05;
  while (rho_of(gamma + hi * e, gamma) < spec.rho_target && hi < 1e3) hi *= 2.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rho_of(gamma + mid * e, gamma) < spec.rho_target ? lo : hi) = mid;
  }
  const Eigen::MatrixXd q = gamma + lo * e;
  const double rho = rho_of(q, gamma);
  if (!(rho < 0.5)) throw NumericalError("could not place rho below 1/2", "rho");

  auto sorted = std::make_shared<std::vector<std::vector<double>>>(static_cast<std::size_t>(L));
  double ks = 0.0;
  for (Eigen::Index j = 0; j < L; ++j) {
    auto& col = (*sorted)[static_cast<std::size_t>(j)];
    col.resize(static_cast<std::size_t>(n));
    for (auto& u : col) u = uniform_open(rng);
    std::sort(col.begin(), col.end());
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double above = static_cast<double>(i + 1) / static_cast<double>(n) - col[i];
      const double below = col[i] - static_cast<double>(i) / static_cast<double>(n);
      ks = std::max({ks, above, below});
    }
  }

  const double row_norm = gamma.rowwise().norm().maxCoeff();
  const auto fn = [sorted, gamma, beta_star](const Eigen::VectorXd& v) {
    const Eigen::VectorXd a = gamma * (v - beta_star);
    Eigen::VectorXd g(a.size());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      const auto& col = (*sorted)[static_cast<std::size_t>(j)];
      const double arg = std::clamp(0.5 + a(j), 0.0, 1.0);
      const auto count = std::upper_bound(col.begin(), col.end(), arg) - col.begin();
      g(j) = static_cast<double>(count) / static_cast<double>(col.size()) - 0.5;
    }
    return g;
  };

  return ContractionFamily{gamma,
                           beta_star,
                           JacobianMatrix{q},
                           rho,
                           spectral_norm(projector(q)) * std::sqrt(static_cast<double>(L)) * ks,
                           0.5 / row_norm,
                           MomentModel::custom(fn, p, L)};
}

Eigen::VectorXd draw_start_in_ball(const ContractionFamily& family, Rng& rng, double fraction) {
  const Eigen::Index p = family.beta_star.size();
  Eigen::VectorXd dir(p);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (Eigen::Index k = 0; k < p; ++k) dir(k) = standard_normal(rng);
    norm = dir.norm();
  }
  const double r = fraction * family.radius * std::pow(uniform_open(rng), 1.0 / static_cast<double>(p));
  return family.beta_star + (r / norm) * dir;
}

}  // namespace ivqr::simlab

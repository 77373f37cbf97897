#include "ivqr/inference/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ivqr/common/distributions.hpp"
#include "ivqr/common/error.hpp"
#include "ivqr/common/parallel.hpp"
#include "ivqr/common/rng.hpp"

namespace ivqr::inference {

const char* test_kind_name(TestKind kind) {
  switch (kind) {
    case TestKind::kWald: return "wald";
    case TestKind::kRectangle: return "rectangle";
    case TestKind::kT: return "t";
  }
  return "unknown";
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)", "alpha");
}

std::vector<Eigen::Index> all_coordinates(Eigen::Index p) {
  std::vector<Eigen::Index> s(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) s[static_cast<std::size_t>(k)] = k;
  return s;
}

void check_subset(const std::vector<Eigen::Index>& subset, Eigen::Index p) {
  if (subset.empty()) throw ConfigError("coordinate subset is empty");
  for (auto k : subset) {
    if (k < 0 || k >= p) throw ConfigError("coordinate index out of range");
  }
}

}  // namespace

Eigen::MatrixXd estimate_omega(const MomentModel& model, const Eigen::VectorXd& beta) {
  const Eigen::Index n = model.n();
  const Eigen::Index L = model.L();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(L, L);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd g = model.contribution(i, beta);
    omega.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  omega.triangularView<Eigen::StrictlyUpper>() = omega.transpose();
  return omega / static_cast<double>(n);
}

Eigen::MatrixXd asymptotic_variance(const JacobianMatrix& gamma, const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd& g = gamma.gamma;
  if (omega.rows() != g.rows() || omega.cols() != g.rows()) throw ConfigError("Omega must be L×L");
  const Eigen::MatrixXd gtg = g.transpose() * g;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gtg, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0.0) || lmin <= kstep::kSingularityRatio * lmax) {
    std::ostringstream msg;
    msg << "Gamma'Gamma is singular (lambda_min = " << lmin << ")";
    throw SingularJacobianError(lmin, 0, msg.str());
  }
  // (Γ'Γ)⁻¹Γ' via QR, then the sandwich.
  const Eigen::MatrixXd proj = g.householderQr().solve(Eigen::MatrixXd::Identity(g.rows(), g.rows()));
  const Eigen::MatrixXd v = proj * omega * proj.transpose();
  return 0.5 * (v + v.transpose());
}

CovarianceEstimate estimate_covariance(const MomentModel& model, const Eigen::VectorXd& beta,
                                       const JacobianMatrix& gamma) {
  CovarianceEstimate out;
  out.omega = estimate_omega(model, beta);
  out.v = asymptotic_variance(gamma, out.omega);
  out.gamma = gamma;
  return out;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& v) {
  if (v.rows() != v.cols()) throw ConfigError("variance matrix must be square");
  const Eigen::MatrixXd sym = 0.5 * (v + v.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double tol = 1e-8 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.size() > 0 && lambda.minCoeff() < -tol) {
    std::ostringstream msg;
    msg << "variance matrix is not positive semidefinite (lambda_min = " << lambda.minCoeff() << ")";
    throw NumericalError(msg.str(), "not-psd");
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

bool is_invertible(const Eigen::MatrixXd& v) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (v + v.transpose()), Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  return lmax > 0.0 && eig.eigenvalues().minCoeff() > 1e-12 * lmax;
}

TestResult wald_test(const Eigen::VectorXd& beta_tilde, const Eigen::VectorXd& beta_null, const Eigen::MatrixXd& v,
                     Eigen::Index n, double alpha, const std::vector<Eigen::Index>& subset) {
  check_alpha(alpha);
  const Eigen::Index p = beta_tilde.size();
  if (beta_null.size() != p || v.rows() != p || v.cols() != p) throw ConfigError("dimension mismatch in Wald test");
  const auto idx = subset.empty() ? all_coordinates(p) : subset;
  check_subset(idx, p);
  const auto q = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd diff(q);
  Eigen::MatrixXd vs(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    diff(a) = beta_tilde(idx[static_cast<std::size_t>(a)]) - beta_null(idx[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < q; ++b) {
      vs(a, b) = v(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
  }
  if (!is_invertible(vs)) {
    throw NumericalError("variance matrix is singular; use the rectangle test instead", "singular-variance");
  }
  TestResult r;
  r.kind = TestKind::kWald;
  r.alpha = alpha;
  r.statistic = static_cast<double>(n) * diff.dot(vs.ldlt().solve(diff));
  r.critical_value = chi_squared_upper_quantile(static_cast<double>(q), alpha);
  r.reject = r.statistic > r.critical_value;
  return r;
}

std::vector<std::vector<double>> rectangle_critical_values(const Eigen::MatrixXd& v,
                                                           const std::vector<std::vector<Eigen::Index>>& targets,
                                                           const std::vector<double>& alphas, int draws,
                                                           std::uint64_t seed, int threads) {
  if (draws < 1) throw ConfigError("rectangle simulation needs at least one draw", "draws");
  for (double a : alphas) check_alpha(a);
  const Eigen::Index p = v.rows();
  for (const auto& t : targets) check_subset(t, p);
  const Eigen::MatrixXd root = psd_sqrt(v);

  // Draws come in fixed-size blocks, each with its own stream, so the values
  // are the same for any thread count.
  constexpr std::size_t kBlock = 1024;
  const auto s_total = static_cast<std::size_t>(draws);
  const std::size_t blocks = (s_total + kBlock - 1) / kBlock;
  const std::size_t nt = targets.size();
  std::vector<double> stats(nt * s_total);
  parallel_chunks(blocks, threads, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd xi(p), w(p);
    for (std::size_t blk = begin; blk < end; ++blk) {
      Rng rng = make_rng(seed, "rectangle", blk);
      const std::size_t stop = std::min(s_total, (blk + 1) * kBlock);
      for (std::size_t s = blk * kBlock; s < stop; ++s) {
        for (Eigen::Index k = 0; k < p; ++k) xi(k) = standard_normal(rng);
        w.noalias() = root * xi;
        for (std::size_t t = 0; t < nt; ++t) {
          double m = 0.0;
          for (auto k : targets[t]) m = std::max(m, std::abs(w(k)));
          stats[t * s_total + s] = m;
        }
      }
    }
  });

  std::vector<std::vector<double>> out(nt, std::vector<double>(alphas.size()));
  for (std::size_t t = 0; t < nt; ++t) {
    auto first = stats.begin() + static_cast<std::ptrdiff_t>(t * s_total);
    std::sort(first, first + static_cast<std::ptrdiff_t>(s_total));
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      // Type-1 empirical quantile at level 1 − α.
      const double pos = std::ceil((1.0 - alphas[a]) * static_cast<double>(s_total));
      const auto rank = std::clamp<std::size_t>(static_cast<std::size_t>(pos), 1, s_total);
      out[t][a] = *(first + static_cast<std::ptrdiff_t>(rank - 1));
    }
  }
  return out;
}

double rectangle_critical_value(const Eigen::MatrixXd& v, double alpha, int draws, std::uint64_t seed) {
  return rectangle_critical_values(v, {all_coordinates(v.rows())}, {alpha}, draws, seed)[0][0];
}

TestResult rectangle_test(const Eigen::VectorXd& beta_tilde, const Eigen::VectorXd& beta_null, Eigen::Index n,
                          double alpha, double critical_value, const std::vector<Eigen::Index>& subset) {
  check_alpha(alpha);
  const Eigen::Index p = beta_tilde.size();
  const auto idx = subset.empty() ? all_coordinates(p) : subset;
  check_subset(idx, p);
  double m = 0.0;
  for (auto k : idx) m = std::max(m, std::abs(beta_tilde(k) - beta_null(k)));
  TestResult r;
  r.kind = TestKind::kRectangle;
  r.alpha = alpha;
  r.statistic = std::sqrt(static_cast<double>(n)) * m;
  r.critical_value = critical_value;
  r.reject = r.statistic > r.critical_value;
  return r;
}

std::vector<Interval> confidence_intervals(const Eigen::VectorXd& beta_tilde, const Eigen::MatrixXd& v,
                                           Eigen::Index n, double alpha) {
  check_alpha(alpha);
  if (n < 1) throw ConfigError("sample size must be positive");
  const double z = normal_quantile(1.0 - alpha / 2.0);
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(beta_tilde.size()));
  for (Eigen::Index k = 0; k < beta_tilde.size(); ++k) {
    const double vk = v(k, k);
    if (vk < 0.0 || !std::isfinite(vk)) {
      throw NumericalError("variance estimate has a negative diagonal entry at coordinate " + std::to_string(k + 1),
                           "negative-variance");
    }
    const double half = z * std::sqrt(vk / static_cast<double>(n));
    out.push_back({beta_tilde(k) - half, beta_tilde(k) + half});
  }
  return out;
}

}  // namespace ivqr::inference

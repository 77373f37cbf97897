#include "ivqr/simlab/dgp.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ivqr/common/distributions.hpp"
#include "ivqr/common/error.hpp"
#include "ivqr/common/rng.hpp"

namespace ivqr::simlab {

namespace {

const double kSqrt3 = std::sqrt(3.0);

}  // namespace

void JtpaSpec::validate() const {
  if (q < 1) throw ConfigError("q must be at least 1", "q");
  if (n < 1) throw ConfigError("n must be at least 1", "n");
}

Dataset generate_jtpa_like(const JtpaSpec& spec, std::uint64_t replication) {
  spec.validate();
  const Eigen::Index n = spec.n;
  const Eigen::Index q = spec.q;
  const Eigen::Index p = spec.p();
  Rng rng = make_rng(spec.seed, "jtpa", replication);

  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, p);
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double cell = uniform_open(rng);
    double s, d;
    if (cell < kCellProbabilities[0]) {
      s = 1.0, d = 1.0;
    } else if (cell < kCellProbabilities[0] + kCellProbabilities[1]) {
      s = 1.0, d = 0.0;
    } else {
      s = 0.0, d = 0.0;
    }
    x(i, 0) = 1.0, x(i, 1) = d;
    z(i, 0) = 1.0, z(i, 1) = s;
    double sum_w = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      const double w = kSqrt3 * (2.0 * uniform_open(rng) - 1.0);
      sum_w += w;
      x(i, 2 + j) = w, x(i, 2 + q + j) = d * w;
      z(i, 2 + j) = w, z(i, 2 + q + j) = s * w;
    }
    const double v = standard_normal(rng);
    const double location = 1.0 + d + sum_w + d * sum_w;
    const double scale = 2.0 * kSqrt3 * static_cast<double>(q) + sum_w + d * sum_w;
    y(i) = location + scale * v;
  }

  std::vector<std::string> xn{"const", "d"}, zn{"const", "s"};
  for (Eigen::Index j = 1; j <= q; ++j) xn.push_back("w" + std::to_string(j)), zn.push_back("w" + std::to_string(j));
  for (Eigen::Index j = 1; j <= q; ++j) xn.push_back("dw" + std::to_string(j)), zn.push_back("sw" + std::to_string(j));
  return Dataset(std::move(y), std::move(x), std::move(z), std::move(xn), std::move(zn));
}

Eigen::VectorXd jtpa_beta(int q, double tau) {
  if (q < 1) throw ConfigError("q must be at least 1", "q");
  const double c = normal_quantile(tau);
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(2 * q + 2, 1.0 + c);
  beta(0) = 1.0 + 2.0 * kSqrt3 * q * c;
  beta(1) = 1.0;
  return beta;
}

double verify_conditional_quantile(const JtpaSpec& spec, double tau, Eigen::Index samples) {
  JtpaSpec big = spec;
  big.n = samples;
  const Dataset data = generate_jtpa_like(big);
  const Eigen::VectorXd beta = jtpa_beta(spec.q, tau);
  std::array<double, 3> below{}, count{};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const bool s = data.z()(i, 1) != 0.0;
    const bool d = data.x()(i, 1) != 0.0;
    const int cell = s && d ? 0 : (s ? 1 : 2);
    count[static_cast<std::size_t>(cell)] += 1.0;
    if (data.y()(i) <= data.x().row(i).dot(beta)) below[static_cast<std::size_t>(cell)] += 1.0;
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    if (count[c] > 0.0) worst = std::max(worst, std::abs(below[c] / count[c] - tau));
  }
  return worst;
}

void DerivativeSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive", "lambda");
  if (n < 1) throw ConfigError("n must be at least 1", "n");
}

Dataset generate_derivative_dgp(const DerivativeSpec& spec, std::uint64_t replication) {
  spec.validate();
  Rng rng = make_rng(spec.seed, "derivative", replication);
  Eigen::VectorXd y(spec.n);
  Eigen::MatrixXd x(spec.n, 1), z(spec.n, 1);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    const double eps = -std::log(uniform_open(rng)) / spec.lambda;
    const double v = uniform_open(rng);
    const double zi = 2.0 * uniform_open(rng);
    x(i, 0) = zi * v;
    z(i, 0) = zi;
    y(i) = x(i, 0) + zi * eps;
  }
  return Dataset(std::move(y), std::move(x), std::move(z), {"x"}, {"z"});
}

double derivative_population_moment(double lambda, double beta) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive", "lambda");
  if (!(beta > 1.0)) throw ConfigError("beta must exceed 1", "domain");
  const double a = lambda * (beta - 1.0);
  return 1.0 + std::expm1(-a) / a;
}

double true_gamma(double lambda, double beta) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive", "lambda");
  if (!(beta > 1.0)) throw ConfigError("beta must exceed 1", "domain");
  const double a = lambda * (beta - 1.0);
  if (a < 1e-2) {
    // Σ_{k≥2} (−1)^k (k−1) a^{k−2} / k!
    double sum = 0.0, power = 1.0, factorial = 2.0;
    for (int k = 2; k < 16; ++k) {
      sum += (k % 2 == 0 ? 1.0 : -1.0) * (k - 1) * power / factorial;
      power *= a;
      factorial *= k + 1;
    }
    return lambda * sum;
  }
  return lambda * (1.0 - (1.0 + a) * std::exp(-a)) / (a * a);
}

const char* instrument_choice_name(InstrumentChoice choice) {
  switch (choice) {
    case InstrumentChoice::kX: return "x";
    case InstrumentChoice::kLogX: return "logx";
    case InstrumentChoice::kXLogX: return "x-logx";
  }
  return "x";
}

InstrumentChoice parse_instrument_choice(const std::string& name) {
  if (name == "x") return InstrumentChoice::kX;
  if (name == "logx") return InstrumentChoice::kLogX;
  if (name == "x-logx") return InstrumentChoice::kXLogX;
  throw ConfigError("unknown instrument choice '" + name + "' (expected x, logx or x-logx)", "instruments");
}

void EarlyStopSpec::validate() const {
  if (n < 2) throw ConfigError("n must be at least 2", "n");
  if (p < 1) throw ConfigError("p must be at least 1", "p");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)", "tau");
}

EarlyStopDraw generate_early_stop_dgp(const EarlyStopSpec& spec, std::uint64_t replication) {
  spec.validate();
  const Eigen::Index n = spec.n, p = spec.p;
  Rng rng = make_rng(spec.seed, "early-stop", replication);
  Eigen::VectorXd theta(p), gamma(p);
  for (Eigen::Index k = 0; k < p; ++k) theta(k) = uniform_open(rng);
  for (Eigen::Index k = 0; k < p; ++k) gamma(k) = uniform_open(rng);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) x(i, k) = uniform_open(rng);
    const double u = uniform_open(rng);
    y(i) = x.row(i).dot(theta) + x.row(i).dot(gamma) * u;
  }
  Eigen::VectorXd start(p);
  for (Eigen::Index k = 0; k < p; ++k) start(k) = standard_normal(rng);

  const Eigen::MatrixXd logx = x.array().log().matrix();
  Eigen::MatrixXd z;
  std::vector<std::string> xn, zn;
  for (Eigen::Index k = 1; k <= p; ++k) xn.push_back("x" + std::to_string(k));
  switch (spec.instruments) {
    case InstrumentChoice::kX:
      z = x;
      zn = xn;
      break;
    case InstrumentChoice::kLogX:
      z = logx;
      for (Eigen::Index k = 1; k <= p; ++k) zn.push_back("logx" + std::to_string(k));
      break;
    case InstrumentChoice::kXLogX:
      z.resize(n, 2 * p);
      z << x, logx;
      zn = xn;
      for (Eigen::Index k = 1; k <= p; ++k) zn.push_back("logx" + std::to_string(k));
      break;
  }
  return {Dataset(std::move(y), std::move(x), std::move(z), std::move(xn), std::move(zn)), std::move(theta),
          std::move(gamma), std::move(start)};
}

}  // namespace ivqr::simlab

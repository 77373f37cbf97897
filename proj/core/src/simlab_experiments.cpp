#include "ivqr/simlab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "ivqr/common/error.hpp"
#include "ivqr/common/parallel.hpp"
#include "ivqr/common/rng.hpp"
#include "ivqr/jacobian/jacobian.hpp"
#include "ivqr/milp/ivqr_solver.hpp"

namespace ivqr::simlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Layout of the per-τ coverage flags: for each α, the p coordinates, then
// rectangle and ellipsoid for each joint target.
struct CellKey {
  double alpha;
  std::string shape;
  std::string target;
  Eigen::Index coordinate = -1;
};

std::vector<CellKey> cell_layout(const std::vector<double>& alphas, const std::vector<std::string>& coord_names,
                                 const std::vector<kstep::InferenceTarget>& targets) {
  std::vector<CellKey> keys;
  for (double a : alphas) {
    for (std::size_t k = 0; k < coord_names.size(); ++k) {
      keys.push_back({a, "coordinate", coord_names[k], static_cast<Eigen::Index>(k)});
    }
    for (const auto& t : targets) {
      keys.push_back({a, "rectangle", t.name});
      keys.push_back({a, "ellipsoid", t.name});
    }
  }
  return keys;
}

const kstep::JointResult* find_joint(const kstep::InferenceReport& report, const std::string& target, double alpha) {
  for (const auto& j : report.joint) {
    if (j.target == target && j.alpha == alpha) return &j;
  }
  return nullptr;
}

}  // namespace

const CoverageCell* CoverageReport::find(double tau, double alpha, const std::string& shape,
                                         const std::string& target) const {
  for (const auto& c : cells) {
    if (c.tau == tau && c.alpha == alpha && c.shape == shape && c.target == target) return &c;
  }
  return nullptr;
}

std::vector<kstep::InferenceTarget> jtpa_targets(int q) {
  kstep::InferenceTarget full{"full", {}};
  kstep::InferenceTarget treatment{"treatment", {1}};
  for (Eigen::Index k = 0; k < 2 * q + 2; ++k) full.coordinates.push_back(k);
  for (Eigen::Index j = 0; j < q; ++j) treatment.coordinates.push_back(2 + q + j);
  return {full, treatment};
}

CoverageReport run_coverage_experiment(const CoverageConfig& config) {
  config.dgp.validate();
  if (config.replications < 1) throw ConfigError("replications must be at least 1", "replications");
  if (config.taus.empty() || config.alphas.empty()) throw ConfigError("need at least one tau and one alpha", "tau");
  const auto start = Clock::now();
  const int q = config.dgp.q;
  const auto targets = jtpa_targets(q);
  const Dataset probe = generate_jtpa_like(JtpaSpec{q, 1, config.dgp.seed});
  const auto keys = cell_layout(config.alphas, probe.x_names(), targets);
  const std::size_t ntau = config.taus.size();
  const std::size_t R = static_cast<std::size_t>(config.replications);

  std::vector<ReplicationRecord> records(R * ntau);
  parallel_chunks(R, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const Dataset data = generate_jtpa_like(config.dgp, r);
      for (std::size_t t = 0; t < ntau; ++t) {
        auto& rec = records[r * ntau + t];
        rec.replication = static_cast<int>(r);
        rec.tau = config.taus[t];
        rec.covered.assign(keys.size(), false);
        const Eigen::VectorXd truth = jtpa_beta(q, rec.tau);
        EstimatorConfig ec = config.estimator;
        ec.seed = derive_seed(config.estimator.seed, "coverage", r * ntau + t);
        ec.pipeline.alphas = config.alphas;
        ec.pipeline.targets = targets;
        try {
          const EstimatorResult est = estimate_ivqr(data, rec.tau, ec);
          rec.milp_termination = milp::termination_name(est.initial.solution.termination);
          const auto& rep = est.report;
          for (std::size_t c = 0; c < keys.size(); ++c) {
            const auto& key = keys[c];
            if (key.shape == "coordinate") {
              for (const auto& ci : rep.intervals) {
                if (ci.alpha == key.alpha) {
                  rec.covered[c] = ci.intervals[static_cast<std::size_t>(key.coordinate)].contains(truth(key.coordinate));
                }
              }
            } else if (const auto* joint = find_joint(rep, key.target, key.alpha)) {
              rec.covered[c] = key.shape == "rectangle" ? rep.rectangle_covers(*joint, truth)
                                                        : rep.ellipsoid_covers(*joint, truth);
            }
          }
        } catch (const std::exception& e) {
          rec.ok = false;
          rec.error = e.what();
        }
      }
    }
  });

  CoverageReport out;
  out.config = config;
  out.replications = config.replications;
  for (std::size_t t = 0; t < ntau; ++t) {
    for (const auto& key : keys) {
      out.cells.push_back({config.taus[t], key.alpha, key.shape, key.target, 0, config.replications, 0.0});
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t t = i % ntau;
    if (!records[i].ok) ++out.failures;
    for (std::size_t c = 0; c < keys.size(); ++c) {
      if (records[i].covered[c]) ++out.cells[t * keys.size() + c].passes;
    }
  }
  for (auto& c : out.cells) c.coverage = static_cast<double>(c.passes) / static_cast<double>(c.replications);
  out.log = std::move(records);
  out.wall_seconds = seconds_since(start);
  return out;
}

const RmseCell* RmseReport::find(double lambda, double beta, Eigen::Index n) const {
  for (const auto& c : cells) {
    if (c.lambda == lambda && c.beta == beta && c.n == n) return &c;
  }
  return nullptr;
}

RmseReport run_rmse_experiment(const RmseConfig& config) {
  if (config.replications < 1) throw ConfigError("replications must be at least 1", "replications");
  const auto start = Clock::now();
  RmseReport out;
  out.config = config;
  std::uint64_t cell_index = 0;
  for (double lambda : config.lambdas) {
    for (double beta : config.betas) {
      for (Eigen::Index n : config.ns) {
        RmseCell cell;
        cell.lambda = lambda, cell.beta = beta, cell.n = n;
        cell.true_gamma = true_gamma(lambda, beta);
        const DerivativeSpec spec{lambda, n, derive_seed(config.seed, "rmse-data", cell_index)};
        spec.validate();
        const std::size_t R = static_cast<std::size_t>(config.replications);
        std::vector<double> tf(R, 0.0), kern(R, 0.0);
        std::vector<char> ok(R, 0);
        parallel_chunks(R, config.threads, [&](std::size_t begin, std::size_t end) {
          for (std::size_t r = begin; r < end; ++r) {
            try {
              const auto data = std::make_shared<const Dataset>(generate_derivative_dgp(spec, r));
              const MomentModel model(data, QuantileSpec(0.5), MomentFamily::kIndicator);
              const Eigen::VectorXd b0 = Eigen::VectorXd::Constant(1, beta);
              jacobian::JacobianOptions opts;
              opts.scheme.kind = config.scheme;
              opts.scheme.seed = derive_seed(config.seed, "rmse-multiplier", cell_index * R + r);
              opts.scheme.draws =
                  config.draws ? *config.draws : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
              tf[r] = jacobian::estimate_entry(model, b0, 0, 0, opts).gamma;
              kern[r] = jacobian::kernel_jacobian_baseline(model, b0).gamma(0, 0);
              ok[r] = 1;
            } catch (const Error&) {
              ok[r] = 0;
            }
          }
        });
        double se_tf = 0.0, se_k = 0.0, sum_tf = 0.0, sum_k = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
          if (!ok[r]) {
            ++cell.failures;
            continue;
          }
          ++cell.replications;
          se_tf += (tf[r] - cell.true_gamma) * (tf[r] - cell.true_gamma);
          se_k += (kern[r] - cell.true_gamma) * (kern[r] - cell.true_gamma);
          sum_tf += tf[r];
          sum_k += kern[r];
        }
        if (cell.replications > 0) {
          const double m = cell.replications;
          cell.rmse_tuning_free = std::sqrt(se_tf / m);
          cell.rmse_kernel = std::sqrt(se_k / m);
          cell.mean_tuning_free = sum_tf / m;
          cell.mean_kernel = sum_k / m;
        }
        out.cells.push_back(cell);
        ++cell_index;
      }
    }
  }
  out.wall_seconds = seconds_since(start);
  return out;
}

EarlyStopReport run_early_stop_experiment(const EarlyStopConfig& config) {
  config.dgp.validate();
  if (config.replications < 1) throw ConfigError("replications must be at least 1", "replications");
  const auto start = Clock::now();
  const std::size_t R = static_cast<std::size_t>(config.replications);
  std::vector<EarlyStopRecord> records(R);
  parallel_chunks(R, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const EarlyStopDraw draw = generate_early_stop_dgp(config.dgp, r);
      milp::IvqrSolveOptions opts;
      opts.limits = config.limits;
      opts.start = draw.start;
      const auto res = milp::solve_ivqr(draw.data, config.dgp.tau, opts);
      auto& rec = records[r];
      rec.replication = static_cast<int>(r);
      rec.termination = milp::termination_name(res.solution.termination);
      rec.q_star = res.rule.q_star;
      rec.nodes = res.solution.nodes;
      rec.has_incumbent = res.solution.has_incumbent();
      rec.moment_sup_norm = rec.has_incumbent ? res.moment_sup_norm : milp::kInf;
      rec.reached = rec.has_incumbent && rec.moment_sup_norm <= rec.q_star;
    }
  });

  EarlyStopReport out;
  out.config = config;
  out.replications = config.replications;
  for (const auto& rec : records) {
    if (rec.reached) ++out.reached;
    if (rec.termination == milp::termination_name(milp::Termination::kEarlyStopQstar)) {
      ++out.early_stopped;
      if (!(rec.moment_sup_norm <= rec.q_star + 1e-9)) ++out.soundness_violations;
    }
  }
  out.frequency = static_cast<double>(out.reached) / static_cast<double>(out.replications);
  out.log = std::move(records);
  out.wall_seconds = seconds_since(start);
  return out;
}

}  // namespace ivqr::simlab

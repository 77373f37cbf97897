#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <memory>
#include <sstream>

#include "report.hpp"

#include "ivqr/common/error.hpp"
#include "ivqr/common/rng.hpp"
#include "ivqr/core_model/moment.hpp"
#include "ivqr/estimator.hpp"
#include "ivqr/milp/builders.hpp"
#include "ivqr/milp/lp_format.hpp"
#include "ivqr/simlab/experiments.hpp"

namespace ivqr::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Loaded {
  Dataset data;
  json info;
};

Loaded load(const RunConfig& c) {
  Dataset data = load_dataset(c.input, c.roles(), c.taus.front()).data;
  json standardization = nullptr;
  if (c.standardize_z) {
    const auto intercept = find_intercept_column(data.z());
    auto s = standardize_instruments(data, intercept);
    standardization = {{"intercept_column", intercept ? json(*intercept) : json(nullptr)},
                       {"transform", matrix_json(s.record.transform)}};
    data = std::move(s.data);
  }
  json info = {{"n", data.n()},
               {"p", data.p()},
               {"L", data.L()},
               {"x_names", data.x_names()},
               {"z_names", data.z_names()},
               {"standardization", standardization}};
  return {std::move(data), std::move(info)};
}

std::vector<kstep::InferenceTarget> parse_targets(const RunConfig& c) {
  std::vector<kstep::InferenceTarget> out;
  for (const auto& spec : c.targets) {
    const auto eq = spec.find('=');
    kstep::InferenceTarget t{spec.substr(0, eq), {}};
    std::stringstream cols(spec.substr(eq + 1));
    std::string col;
    while (std::getline(cols, col, ',')) {
      const auto it = std::find(c.x.begin(), c.x.end(), col);
      if (it == c.x.end()) throw ConfigError("--target column '" + col + "' is not among the --x columns", "target");
      t.coordinates.push_back(it - c.x.begin());
    }
    out.push_back(std::move(t));
  }
  return out;
}

EstimatorConfig estimator_config(const RunConfig& c, std::uint64_t seed) {
  EstimatorConfig ec;
  if (c.subsample) ec.subsample = *c.subsample;
  ec.seed = seed;
  ec.limits.time_limit_ms = c.time_limit_ms;
  ec.limits.node_limit = c.node_limit;
  ec.early_stop = c.early_stop;
  ec.pipeline.k_iterations = c.k_iterations;
  ec.pipeline.jacobian.scheme.kind = c.scheme_kind();
  ec.pipeline.jacobian.scheme.draws = c.draws.value_or(0);
  ec.pipeline.jacobian.permissive = c.permissive_jacobian;
  ec.pipeline.jacobian.threads = c.threads;
  ec.pipeline.alphas = c.alphas;
  if (c.rectangle_draws > 0) ec.pipeline.rectangle_draws = c.rectangle_draws;
  ec.pipeline.targets = parse_targets(c);
  return ec;
}

// Each τ block gets its own master seed so blocks are independent.
std::uint64_t block_seed(const RunConfig& c, std::size_t block) { return derive_seed(c.seed, "tau-block", block); }

json seeds_json(std::uint64_t master, const EstimatorSeeds& s) {
  return {{"master", master},
          {"subsample", s.subsample},
          {"start", s.start},
          {"jacobian_initial", s.jacobian_initial},
          {"jacobian", s.jacobian},
          {"rectangle", s.rectangle}};
}

json with_timing(json report, const RunConfig& c, Clock::time_point start) {
  if (c.timings) report["timings"] = {{"total_seconds", seconds_since(start)}};
  return report;
}

}  // namespace

json cmd_estimate(const RunConfig& c) {
  const auto start = Clock::now();
  const Loaded loaded = load(c);
  const Dataset& data = loaded.data;

  json report = envelope("estimate", echo(c));
  report["data"] = loaded.info;
  json blocks = json::array();
  for (std::size_t b = 0; b < c.taus.size(); ++b) {
    const auto block_start = Clock::now();
    const double tau = c.taus[b];
    const std::uint64_t seed = block_seed(c, b);
    const EstimatorResult r = estimate_ivqr(data, tau, estimator_config(c, seed));

    json block = {{"tau", tau}, {"seeds", seeds_json(seed, r.seeds)}, {"solver", solver_json(r)}};
    block["gamma_initial"] = jacobian_json(r.gamma_initial, data.z_names(), data.x_names());
    block["gamma_tilde"] = jacobian_json(r.report.gamma_tilde, data.z_names(), data.x_names());
    block["inference"] = inference_json(r.report, data.x_names());
    std::vector<std::string> warnings = r.warnings;
    warnings.insert(warnings.end(), r.report.warnings.begin(), r.report.warnings.end());
    block["warnings"] = warnings;
    if (c.timings) {
      block["timings"] = {{"block_seconds", seconds_since(block_start)},
                          {"milp_seconds", r.initial.solution.wall_seconds}};
    }
    blocks.push_back(std::move(block));
  }
  report["estimates"] = std::move(blocks);
  return with_timing(std::move(report), c, start);
}

json cmd_jacobian(const RunConfig& c) {
  const auto start = Clock::now();
  json report = envelope("jacobian", echo(c));
  json blocks = json::array();

  if (c.density) {
    // Only the outcome column is needed; it stands in for x and z so the
    // usual loader and its checks apply.
    const Dataset data = load_dataset(c.input, {c.y, {c.y}, {c.y}, std::nullopt}, c.taus.front()).data;
    for (std::size_t b = 0; b < c.taus.size(); ++b) {
      jacobian::MultiplierScheme scheme{c.scheme_kind(), derive_seed(block_seed(c, b), "density"),
                                        c.draws.value_or(jacobian::default_draws(data.n()))};
      const auto d = jacobian::bootstrap_density(data.y(), c.taus[b], scheme, c.threads);
      blocks.push_back({{"tau", c.taus[b]},
                        {"seed", scheme.seed},
                        {"density", d.density},
                        {"b0", d.b0},
                        {"mean_scaled_square", d.mean_scaled_square},
                        {"draws", d.draws}});
    }
    report["mode"] = "density";
    report["data"] = {{"n", data.n()}, {"column", c.y}};
    report["densities"] = std::move(blocks);
    return with_timing(std::move(report), c, start);
  }

  const Loaded loaded = load(c);
  const auto shared = std::make_shared<const Dataset>(loaded.data);
  report["mode"] = "jacobian";
  report["data"] = loaded.info;
  for (std::size_t b = 0; b < c.taus.size(); ++b) {
    const double tau = c.taus[b];
    const std::uint64_t seed = block_seed(c, b);
    json block = {{"tau", tau}};
    Eigen::VectorXd beta;
    if (c.beta.empty()) {
      const EstimatorResult r = estimate_ivqr(*shared, tau, estimator_config(c, seed));
      beta = r.report.beta_tilde;
      block["beta_source"] = "estimate";
      block["estimate_seeds"] = seeds_json(seed, r.seeds);
    } else {
      beta = Eigen::Map<const Eigen::VectorXd>(c.beta.data(), static_cast<Eigen::Index>(c.beta.size()));
      block["beta_source"] = "user";
    }
    jacobian::JacobianOptions opt;
    opt.scheme = {c.scheme_kind(), derive_seed(seed, "jacobian-command"),
                  c.draws.value_or(jacobian::default_draws(shared->n()))};
    opt.permissive = c.permissive_jacobian;
    opt.threads = c.threads;
    const MomentModel model(shared, QuantileSpec(tau));
    const auto est = jacobian::estimate_jacobian(model, beta, opt);
    block["beta"] = vector_json(beta);
    block["seed"] = opt.scheme.seed;
    block["scheme"] = jacobian::scheme_name(opt.scheme.kind);
    block["jacobian"] = jacobian_json(est, shared->z_names(), shared->x_names());
    blocks.push_back(std::move(block));
  }
  report["jacobians"] = std::move(blocks);
  return with_timing(std::move(report), c, start);
}

json cmd_milp_export(const RunConfig& c) {
  const auto start = Clock::now();
  const Loaded loaded = load(c);
  const double tau = c.taus.front();
  Dataset data = loaded.data;
  if (c.subsample && *c.subsample < data.n()) {
    data = milp::subsample(data, *c.subsample, derive_estimator_seeds(c.seed).subsample);
  }
  if (c.model == "censored-ivqr" && !data.censor()) {
    throw ConfigError("--model censored-ivqr needs a --censor column", "columns");
  }

  const milp::ParameterBox box = milp::default_box(data);
  const double m = c.big_m ? *c.big_m : milp::choose_big_m(data, box);
  milp::BuiltMilp built = [&] {
    if (c.model == "hd-ivqr") return milp::build_hd_ivqr_milp(data, tau, c.lambda, m);
    if (c.model == "censored") return milp::build_censored_milp(data, tau, c.lambda, m);
    if (c.model == "censored-ivqr") return milp::build_censored_ivqr_milp(data, tau, m);
    return milp::build_ivqr_milp(data, tau, m, box, milp::default_wedge(m));
  }();
  milp::export_lp_file(built.problem, c.out);

  json report = envelope("milp-export", echo(c));
  report["data"] = loaded.info;
  report["model"] = c.model;
  report["rows_used"] = data.n();
  report["big_m"] = built.big_m;
  report["wedge"] = built.wedge;
  report["q_star"] = c.model == "censored" ? json(nullptr) : json(milp::compute_qstar(data).q_star);
  report["variables"] = built.problem.num_variables();
  report["binaries"] = built.problem.num_binaries();
  report["constraints"] = built.problem.num_constraints();
  report["lp_file"] = c.out;
  return with_timing(std::move(report), c, start);
}

json cmd_simulate(const RunConfig& c) {
  json report = envelope("simulate", echo(c));
  report["experiment"] = c.experiment;

  if (c.experiment == "coverage") {
    simlab::CoverageConfig cc;
    if (c.q) cc.dgp.q = *c.q;
    if (!c.sizes.empty()) cc.dgp.n = c.sizes.front();
    cc.dgp.seed = c.seed;
    cc.taus = c.taus;
    cc.alphas = c.alphas;
    if (c.replications) cc.replications = *c.replications;
    cc.estimator = estimator_config(c, c.seed);
    cc.estimator.pipeline.jacobian.threads = 1;
    cc.estimator.pipeline.targets = simlab::jtpa_targets(cc.dgp.q);
    cc.threads = c.threads;
    const auto r = simlab::run_coverage_experiment(cc);

    json cells = json::array();
    for (const auto& cell : r.cells) {
      cells.push_back({{"tau", cell.tau},
                       {"alpha", cell.alpha},
                       {"nominal", 1.0 - cell.alpha},
                       {"shape", cell.shape},
                       {"target", cell.target},
                       {"passes", cell.passes},
                       {"replications", cell.replications},
                       {"coverage", cell.coverage}});
    }
    json failed = json::array();
    for (const auto& rec : r.log) {
      if (!rec.ok) failed.push_back({{"replication", rec.replication}, {"tau", rec.tau}, {"error", rec.error}});
    }
    report["dgp"] = {{"q", cc.dgp.q}, {"n", cc.dgp.n}, {"p", cc.dgp.p()}};
    report["replications"] = r.replications;
    report["failures"] = r.failures;
    report["cells"] = std::move(cells);
    report["failed"] = std::move(failed);
    if (c.timings) report["timings"] = {{"total_seconds", r.wall_seconds}};
  } else if (c.experiment == "rmse") {
    simlab::RmseConfig rc;
    if (!c.lambdas.empty()) rc.lambdas = c.lambdas;
    if (!c.betas.empty()) rc.betas = c.betas;
    if (!c.sizes.empty()) rc.ns.assign(c.sizes.begin(), c.sizes.end());
    if (c.replications) rc.replications = *c.replications;
    rc.seed = c.seed;
    rc.scheme = c.scheme_kind();
    rc.draws = c.draws;
    rc.threads = c.threads;
    const auto r = simlab::run_rmse_experiment(rc);

    json cells = json::array();
    for (const auto& cell : r.cells) {
      cells.push_back({{"lambda", cell.lambda},
                       {"beta", cell.beta},
                       {"n", cell.n},
                       {"true_gamma", cell.true_gamma},
                       {"rmse_tuning_free", cell.rmse_tuning_free},
                       {"rmse_kernel", cell.rmse_kernel},
                       {"mean_tuning_free", cell.mean_tuning_free},
                       {"mean_kernel", cell.mean_kernel},
                       {"replications", cell.replications},
                       {"failures", cell.failures}});
    }
    report["cells"] = std::move(cells);
    if (c.timings) report["timings"] = {{"total_seconds", r.wall_seconds}};
  } else {
    simlab::EarlyStopConfig ec;
    if (!c.sizes.empty()) ec.dgp.n = c.sizes.front();
    if (c.p) ec.dgp.p = *c.p;
    ec.dgp.instruments = simlab::parse_instrument_choice(c.instruments);
    ec.dgp.tau = c.taus.front();
    ec.dgp.seed = c.seed;
    if (c.replications) ec.replications = *c.replications;
    ec.limits.time_limit_ms = c.time_limit_ms;
    ec.limits.node_limit = c.node_limit;
    ec.threads = c.threads;
    const auto r = simlab::run_early_stop_experiment(ec);

    json log = json::array();
    for (const auto& rec : r.log) {
      log.push_back({{"replication", rec.replication},
                     {"termination", rec.termination},
                     {"q_star", rec.q_star},
                     {"moment_sup_norm", rec.moment_sup_norm},
                     {"nodes", rec.nodes},
                     {"reached", rec.reached},
                     {"has_incumbent", rec.has_incumbent}});
    }
    report["replications"] = r.replications;
    report["reached"] = r.reached;
    report["frequency"] = r.frequency;
    report["early_stopped"] = r.early_stopped;
    report["soundness_violations"] = r.soundness_violations;
    report["log"] = std::move(log);
    if (c.timings) report["timings"] = {{"total_seconds", r.wall_seconds}};
  }
  return report;
}

std::string simulate_table(const json& report) {
  std::ostringstream os;
  os << std::fixed;
  const std::string experiment = report.at("experiment");
  if (experiment == "coverage") {
    os << std::setw(6) << "tau" << std::setw(9) << "nominal" << std::setw(12) << "shape" << std::setw(12) << "target"
       << std::setw(10) << "coverage" << std::setw(8) << "reps" << '\n';
    for (const auto& cell : report.at("cells")) {
      os << std::setprecision(2) << std::setw(6) << cell.at("tau").get<double>() << std::setw(9)
         << cell.at("nominal").get<double>() << std::setw(12) << cell.at("shape").get<std::string>() << std::setw(12)
         << cell.at("target").get<std::string>() << std::setprecision(4) << std::setw(10)
         << cell.at("coverage").get<double>() << std::setw(8) << cell.at("replications").get<int>() << '\n';
    }
    os << "failures: " << report.at("failures").get<int>() << '\n';
  } else if (experiment == "rmse") {
    os << std::setw(8) << "lambda" << std::setw(7) << "beta" << std::setw(7) << "n" << std::setw(11) << "true"
       << std::setw(13) << "rmse_tf" << std::setw(13) << "rmse_kernel" << std::setw(9) << "failed" << '\n';
    for (const auto& cell : report.at("cells")) {
      os << std::setprecision(4) << std::setw(8) << cell.at("lambda").get<double>() << std::setprecision(2)
         << std::setw(7) << cell.at("beta").get<double>() << std::setw(7) << cell.at("n").get<long>()
         << std::setprecision(5) << std::setw(11) << cell.at("true_gamma").get<double>() << std::setw(13)
         << cell.at("rmse_tuning_free").get<double>() << std::setw(13) << cell.at("rmse_kernel").get<double>()
         << std::setw(9) << cell.at("failures").get<int>() << '\n';
    }
  } else {
    os << std::setprecision(4) << "replications " << report.at("replications").get<int>() << '\n'
       << "reached      " << report.at("reached").get<int>() << '\n'
       << "frequency    " << report.at("frequency").get<double>() << '\n'
       << "early_stop   " << report.at("early_stopped").get<int>() << '\n'
       << "violations   " << report.at("soundness_violations").get<int>() << '\n';
  }
  return os.str();
}

}  // namespace ivqr::cli

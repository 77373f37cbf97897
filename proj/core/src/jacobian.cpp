#include "ivqr/jacobian/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ivqr/common/distributions.hpp"
#include "ivqr/common/error.hpp"
#include "ivqr/common/parallel.hpp"
#include "ivqr/common/rng.hpp"

namespace ivqr::jacobian {

const char* scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kBernoulli: return "bernoulli";
    case SchemeKind::kGaussian: return "gaussian";
    case SchemeKind::kMultinomial: return "multinomial";
    case SchemeKind::kUnit: return "unit";
  }
  return "unknown";
}

SchemeKind parse_scheme(const std::string& name) {
  if (name == "bernoulli") return SchemeKind::kBernoulli;
  if (name == "gaussian") return SchemeKind::kGaussian;
  if (name == "multinomial") return SchemeKind::kMultinomial;
  if (name == "unit") return SchemeKind::kUnit;
  throw ConfigError("unknown multiplier scheme '" + name + "' (expected bernoulli, gaussian or multinomial)",
                    "scheme");
}

int default_draws(Eigen::Index n) {
  return std::max(200, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
}

Eigen::VectorXd draw_multipliers(const MultiplierScheme& scheme, std::uint64_t index, Eigen::Index n) {
  Rng rng = make_rng(scheme.seed, "multiplier", index);
  Eigen::VectorXd xi(n);
  switch (scheme.kind) {
    case SchemeKind::kBernoulli:
      for (Eigen::Index i = 0; i < n; ++i) xi(i) = (rng() >> 63) ? 2.0 : 0.0;
      break;
    case SchemeKind::kGaussian:
      for (Eigen::Index i = 0; i < n; ++i) xi(i) = 1.0 + standard_normal(rng);
      break;
    case SchemeKind::kMultinomial: {
      xi.setZero();
      const auto nd = static_cast<double>(n);
      for (Eigen::Index r = 0; r < n; ++r) {
        auto i = static_cast<Eigen::Index>(uniform_open(rng) * nd);
        xi(std::min(i, n - 1)) += 1.0;
      }
      break;
    }
    case SchemeKind::kUnit:
      xi.setOnes();
      break;
  }
  return xi;
}

namespace {

constexpr double kEtaFloor = 0x1.0p-40;

// Core of the root search on thresholds already sorted ascending.
double min_half_gap(const double* ys, std::size_t m) {
  double half_gap = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < m; ++s) {
    if (ys[s + 1] > ys[s]) half_gap = std::min(half_gap, 0.5 * (ys[s + 1] - ys[s]));
  }
  return half_gap;
}

// `half_gap` is half the smallest positive spacing of the thresholds; any
// value no larger keeps ỹ ± η inside the neighbouring gaps.
ScalarRootSolution solve_sorted(const double* ys, const double* ws, std::size_t m, double c, double center,
                                double window, double half_gap) {
  const double lo = center - window;
  const double hi = center + window;
  const std::size_t first = static_cast<std::size_t>(std::lower_bound(ys, ys + m, lo) - ys);
  const std::size_t last_end = static_cast<std::size_t>(std::upper_bound(ys, ys + m, hi) - ys);
  if (first >= last_end) {
    std::ostringstream msg;
    msg << "no threshold inside the window [" << lo << ", " << hi << "]; increase the window half-width";
    throw NumericalError(msg.str(), "window");
  }

  double prefix = 0.0;  // Σ w over thresholds below the window
  for (std::size_t s = 0; s < first; ++s) prefix += ws[s];

  struct Best {
    double b;
    double residual;
    double distance;
    int group;  // -1 for the center candidate
  } best{center, 0.0, 0.0, -1};
  {
    double at_center = prefix;
    for (std::size_t s = first; s < last_end && ys[s] <= center; ++s) at_center += ws[s];
    best.residual = std::abs(at_center - c);
  }
  auto consider = [&](double b, double sum, int group) {
    const double residual = std::abs(sum - c);
    const double distance = std::abs(b - center);
    if (residual < best.residual || (residual == best.residual && distance < best.distance) ||
        (residual == best.residual && distance == best.distance && b < best.b)) {
      best = {b, residual, distance, group};
    }
  };

  double cum = prefix;
  int group = 0;
  int last_group = 0;
  for (std::size_t s = first; s < last_end; ++group) {
    const double v = ys[s];
    const double before = cum;
    while (s < last_end && ys[s] == v) cum += ws[s++];
    const double floor = kEtaFloor * (1.0 + std::abs(v));
    const double eta = std::isfinite(half_gap) ? std::max(half_gap, floor) : floor;
    consider(v - eta, before, group);
    consider(v + eta, cum, group);
    last_group = group;
  }

  ScalarRootSolution out;
  out.b_star = std::clamp(best.b, lo, hi);
  out.residual = best.residual;
  out.at_boundary = (best.group == 0 && first > 0) || (best.group == last_group && last_end < m);
  return out;
}

double default_window(const std::vector<double>& ytilde, double center) {
  if (ytilde.empty()) return 1.0;
  std::vector<double> dev(ytilde.size());
  for (std::size_t i = 0; i < ytilde.size(); ++i) dev[i] = std::abs(ytilde[i] - center);
  auto mid = dev.begin() + static_cast<std::ptrdiff_t>(dev.size() / 2);
  std::nth_element(dev.begin(), mid, dev.end());
  double scale = 1.4826 * *mid;
  if (!(scale > 0.0)) {
    scale = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(dev.size());
  }
  if (!(scale > 0.0)) return 1.0;
  return 10.0 * scale;
}

// Row data permuted into a canonical order so that results do not depend on
// how the caller ordered the sample.
struct CanonicalData {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  std::optional<Eigen::VectorXd> censor;
};

CanonicalData canonicalize(const Dataset& d) {
  const Eigen::Index n = d.n();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    if (d.y()(a) != d.y()(b)) return d.y()(a) < d.y()(b);
    for (Eigen::Index k = 0; k < d.p(); ++k) {
      if (d.x()(a, k) != d.x()(b, k)) return d.x()(a, k) < d.x()(b, k);
    }
    for (Eigen::Index j = 0; j < d.L(); ++j) {
      if (d.z()(a, j) != d.z()(b, j)) return d.z()(a, j) < d.z()(b, j);
    }
    if (d.censor()) return (*d.censor())(a) < (*d.censor())(b);
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less);
  CanonicalData out;
  out.y.resize(n);
  out.x.resize(n, d.p());
  out.z.resize(n, d.L());
  if (d.censor()) out.censor = Eigen::VectorXd(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index i = order[static_cast<std::size_t>(r)];
    out.y(r) = d.y()(i);
    out.x.row(r) = d.x().row(i);
    out.z.row(r) = d.z().row(i);
    if (out.censor) (*out.censor)(r) = (*d.censor())(i);
  }
  return out;
}

double fitted(const Eigen::MatrixXd& x, Eigen::Index i, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) s += x(i, k) * b(k);
  return s;
}

// Everything about column k that does not depend on the multipliers.
struct ColumnSetup {
  Eigen::Index k = 0;
  double b0k = 0.0;
  double window = 0.0;
  // Rows whose indicator is free of b, with that indicator value.
  std::vector<Eigen::Index> const_rows;
  std::vector<double> const_value;
  // Threshold rows sorted by ỹ ascending.
  std::vector<Eigen::Index> sorted_rows;
  std::vector<double> sorted_y;
  std::vector<double> sorted_sign;
  // For every row: +1 / −1 threshold sign, 0 for constant rows, and ỹ.
  std::vector<double> row_sign;
  std::vector<double> row_y;
};

ColumnSetup setup_column(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                         const std::optional<Eigen::VectorXd>& censor, bool censored_family,
                         const Eigen::VectorXd& b0, Eigen::Index k, std::optional<double> window) {
  const Eigen::Index n = y.size();
  ColumnSetup s;
  s.k = k;
  s.b0k = b0(k);
  s.row_sign.assign(static_cast<std::size_t>(n), 0.0);
  s.row_y.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<Eigen::Index> thr;
  std::vector<double> all_ytilde;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (censored_family && y(i) <= (*censor)(i)) {
      s.const_rows.push_back(i);
      s.const_value.push_back(1.0);
      continue;
    }
    double r = y(i);
    for (Eigen::Index l = 0; l < x.cols(); ++l) {
      if (l != k) r -= x(i, l) * b0(l);
    }
    const double xik = x(i, k);
    if (xik == 0.0) {
      s.const_rows.push_back(i);
      s.const_value.push_back(r <= 0.0 ? 1.0 : 0.0);
      continue;
    }
    const double yt = r / xik;
    s.row_sign[static_cast<std::size_t>(i)] = xik > 0.0 ? 1.0 : -1.0;
    s.row_y[static_cast<std::size_t>(i)] = yt;
    thr.push_back(i);
    all_ytilde.push_back(yt);
  }
  if (thr.empty()) {
    throw DataError("regressor column " + std::to_string(k + 1) + " is identically zero; entry not estimable",
                    "degenerate-entry");
  }
  std::stable_sort(thr.begin(), thr.end(), [&](Eigen::Index a, Eigen::Index b) {
    return s.row_y[static_cast<std::size_t>(a)] < s.row_y[static_cast<std::size_t>(b)];
  });
  s.sorted_rows = thr;
  for (auto i : thr) {
    s.sorted_y.push_back(s.row_y[static_cast<std::size_t>(i)]);
    s.sorted_sign.push_back(s.row_sign[static_cast<std::size_t>(i)]);
  }
  if (window) {
    if (!(*window > 0.0) || !std::isfinite(*window)) throw ConfigError("window half-width must be positive", "window");
    s.window = *window;
  } else {
    s.window = default_window(all_ytilde, s.b0k);
  }
  return s;
}

struct DrawRecord {
  double delta;
  double response;
  double residual;
  bool flagged;
};

// Instrument data permuted into one column's threshold order.
struct ColumnPanel {
  double half_gap = 0.0;
  // sorted_sz[j][s] = sign_s · Z_{row_s, j}
  std::vector<std::vector<double>> sorted_sz;
  // const_z[j][r] = Z_{row_r, j} · indicator_r
  std::vector<std::vector<double>> const_z;
};

ColumnPanel make_panel(const ColumnSetup& col, const Eigen::MatrixXd& z) {
  ColumnPanel panel;
  panel.half_gap = min_half_gap(col.sorted_y.data(), col.sorted_y.size());
  panel.sorted_sz.resize(static_cast<std::size_t>(z.cols()));
  panel.const_z.resize(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    auto& sz = panel.sorted_sz[static_cast<std::size_t>(j)];
    sz.resize(col.sorted_rows.size());
    for (std::size_t s = 0; s < sz.size(); ++s) sz[s] = col.sorted_sign[s] * z(col.sorted_rows[s], j);
    auto& cz = panel.const_z[static_cast<std::size_t>(j)];
    cz.resize(col.const_rows.size());
    for (std::size_t r = 0; r < cz.size(); ++r) cz[r] = z(col.const_rows[r], j) * col.const_value[r];
  }
  return panel;
}

// Work buffers reused across draws on one thread.
struct Scratch {
  std::vector<double> ys;
  std::vector<double> ws;
  std::vector<double> xs;  // ξ gathered into threshold order
  std::vector<double> xc;  // ξ gathered at the constant rows
};

// Per-draw quantities shared by every entry in instrument row j:
// d_j = Σ Z_ij (1{Y_i ≤ X_i'b₀} + (ξ_i − 1) τ) and t_j = Σ (ξ_i − 1) Z_ij.
struct RowTotals {
  double d = 0.0;
  double t = 0.0;
};

DrawRecord solve_draw(const ColumnSetup& col, const ColumnPanel& panel, std::size_t j, const RowTotals& totals,
                      double offset, Eigen::Index n, Scratch& scratch) {
  const auto& sz = panel.sorted_sz[j];
  const auto& cz = panel.const_z[j];
  double constant = 0.0;
  for (std::size_t r = 0; r < cz.size(); ++r) constant += scratch.xc[r] * cz[r];
  scratch.ys.clear();
  scratch.ws.clear();
  double negative = 0.0;  // Σ_{A−} w̃
  for (std::size_t s = 0; s < sz.size(); ++s) {
    const double w = scratch.xs[s] * sz[s];
    if (w == 0.0) continue;
    if (col.sorted_sign[s] < 0.0) negative += w;
    scratch.ys.push_back(col.sorted_y[s]);
    scratch.ws.push_back(w);
  }
  const double c = totals.d - constant + negative;

  DrawRecord rec{0.0, 0.0, std::abs(c), false};
  if (scratch.ys.empty()) return rec;  // nothing depends on b; b* = b₀
  const ScalarRootSolution sol = solve_sorted(scratch.ys.data(), scratch.ws.data(), scratch.ys.size(), c, col.b0k,
                                              col.window, panel.half_gap);
  rec.delta = sol.b_star - col.b0k;
  rec.residual = sol.residual;
  rec.flagged = sol.at_boundary;
  if (rec.delta == 0.0) return rec;

  // −n^{-1/2} H*_n(b*) = −n⁻¹ Σ (ξ_i − 1) g_ij(b*). Rows with X_ik > 0 are
  // below b* on a prefix of the threshold order, rows with X_ik < 0 on a
  // suffix.
  const auto& ysort = col.sorted_y;
  const auto le = static_cast<std::size_t>(std::upper_bound(ysort.begin(), ysort.end(), sol.b_star) - ysort.begin());
  const auto lt = static_cast<std::size_t>(std::lower_bound(ysort.begin(), ysort.end(), sol.b_star) - ysort.begin());
  double acc = 0.0;
  for (std::size_t r = 0; r < cz.size(); ++r) acc += (scratch.xc[r] - 1.0) * cz[r];
  for (std::size_t s = 0; s < le; ++s) {
    if (col.sorted_sign[s] > 0.0) acc += (scratch.xs[s] - 1.0) * sz[s];
  }
  for (std::size_t s = lt; s < sz.size(); ++s) {
    if (col.sorted_sign[s] < 0.0) acc -= (scratch.xs[s] - 1.0) * sz[s];
  }
  acc -= offset * totals.t;
  rec.response = -acc / static_cast<double>(n);
  return rec;
}

struct EntryKey {
  Eigen::Index j;
  Eigen::Index k;
};

struct EngineResult {
  std::vector<EntryEstimate> estimates;
  std::vector<std::string> failures;  // one message per non-estimable entry, empty when fine
  std::vector<std::string> failure_kind;
};

EngineResult run_engine(const MomentModel& model, const Eigen::VectorXd& b0, const std::vector<EntryKey>& keys,
                        const JacobianOptions& options) {
  if (model.family() == MomentFamily::kCustom) {
    throw ConfigError("bootstrap Jacobian needs a data-backed moment family", "family");
  }
  const Dataset& data = model.data();
  if (b0.size() != data.p() || !b0.allFinite()) throw ConfigError("b0 must be a finite vector of length p");
  if (options.scheme.draws < 2) throw ConfigError("multiplier scheme needs at least 2 draws", "draws");

  const CanonicalData cd = canonicalize(data);
  const Eigen::Index n = cd.y.size();
  const bool censored = model.family() == MomentFamily::kCensoredIvqr;
  const double offset = model.offset();

  std::vector<double> ind0(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = fitted(cd.x, i, b0);
    const double threshold = censored ? std::max(f, (*cd.censor)(i)) : f;
    ind0[static_cast<std::size_t>(i)] = cd.y(i) <= threshold ? 1.0 : 0.0;
  }

  std::vector<std::optional<ColumnSetup>> columns(static_cast<std::size_t>(data.p()));
  std::vector<std::string> column_error(static_cast<std::size_t>(data.p()));
  for (const auto& key : keys) {
    auto& slot = columns[static_cast<std::size_t>(key.k)];
    if (slot || !column_error[static_cast<std::size_t>(key.k)].empty()) continue;
    try {
      slot = setup_column(cd.y, cd.x, cd.censor, censored, b0, key.k, options.window);
    } catch (const DataError& e) {
      column_error[static_cast<std::size_t>(key.k)] = e.what();
    }
  }

  const auto draws = static_cast<std::size_t>(options.scheme.draws);
  const std::size_t entries = keys.size();
  std::vector<DrawRecord> records(entries * draws);

  std::vector<std::optional<ColumnPanel>> panels(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k]) panels[k] = make_panel(*columns[k], cd.z);
  }
  const Eigen::Index L = cd.z.cols();
  std::vector<double> zind(static_cast<std::size_t>(L), 0.0);  // Σ Z_ij 1{Y_i ≤ X_i'b₀}
  for (Eigen::Index j = 0; j < L; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) zind[static_cast<std::size_t>(j)] += cd.z(i, j) * ind0[static_cast<std::size_t>(i)];
  }

  std::vector<std::size_t> by_column(entries);
  std::iota(by_column.begin(), by_column.end(), std::size_t{0});
  std::stable_sort(by_column.begin(), by_column.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a].k < keys[b].k; });

  parallel_chunks(draws, options.threads, [&](std::size_t begin, std::size_t end) {
    Scratch scratch;
    std::vector<RowTotals> totals(static_cast<std::size_t>(L));
    for (std::size_t b = begin; b < end; ++b) {
      const Eigen::VectorXd xi = draw_multipliers(options.scheme, b, n);
      for (Eigen::Index j = 0; j < L; ++j) {
        double t = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) t += (xi(i) - 1.0) * cd.z(i, j);
        totals[static_cast<std::size_t>(j)] = {zind[static_cast<std::size_t>(j)] + offset * t, t};
      }
      std::size_t gathered = columns.size();
      for (const std::size_t e : by_column) {
        const auto k = static_cast<std::size_t>(keys[e].k);
        const auto& col = columns[k];
        if (!col) continue;
        if (gathered != k) {
          scratch.xs.resize(col->sorted_rows.size());
          for (std::size_t s = 0; s < scratch.xs.size(); ++s) scratch.xs[s] = xi(col->sorted_rows[s]);
          scratch.xc.resize(col->const_rows.size());
          for (std::size_t r = 0; r < scratch.xc.size(); ++r) scratch.xc[r] = xi(col->const_rows[r]);
          gathered = k;
        }
        records[e * draws + b] = solve_draw(*col, *panels[k], static_cast<std::size_t>(keys[e].j),
                                            totals[static_cast<std::size_t>(keys[e].j)], offset, n, scratch);
      }
    }
  });

  EngineResult out;
  out.estimates.resize(entries);
  out.failures.resize(entries);
  out.failure_kind.resize(entries);
  const double bd = static_cast<double>(draws);
  for (std::size_t e = 0; e < entries; ++e) {
    EntryEstimate& est = out.estimates[e];
    const auto k = static_cast<std::size_t>(keys[e].k);
    est.diagnostics.draws = static_cast<int>(draws);
    if (!columns[k]) {
      est.diagnostics.estimable = false;
      out.failures[e] = column_error[k];
      out.failure_kind[e] = "degenerate-entry";
      continue;
    }
    est.diagnostics.window = columns[k]->window;
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < draws; ++b) {
      const DrawRecord& r = records[e * draws + b];
      num += r.response * r.delta;
      den += r.delta * r.delta;
      est.diagnostics.flagged += r.flagged ? 1 : 0;
      est.diagnostics.max_residual = std::max(est.diagnostics.max_residual, r.residual);
      if (options.keep_draws) {
        est.draws.delta.push_back(r.delta);
        est.draws.response.push_back(r.response);
        est.draws.residual.push_back(r.residual);
      }
    }
    est.draws.flagged = est.diagnostics.flagged;
    est.diagnostics.numerator = num / bd;
    est.diagnostics.denominator = den / bd;
    if (!(den > 0.0)) {
      est.diagnostics.estimable = false;
      out.failures[e] = "all bootstrap perturbations are zero (zero denominator)";
      out.failure_kind[e] = "zero-denominator";
      continue;
    }
    est.gamma = num / den;
    double meat = 0.0;
    for (std::size_t b = 0; b < draws; ++b) {
      const DrawRecord& r = records[e * draws + b];
      const double u = r.response - est.gamma * r.delta;
      meat += r.delta * r.delta * u * u;
    }
    est.diagnostics.draw_se = std::sqrt(meat) / den;
  }
  return out;
}

std::string entry_label(Eigen::Index j, Eigen::Index k) {
  return "(" + std::to_string(j + 1) + "," + std::to_string(k + 1) + ")";
}

}  // namespace

ScalarRootSolution solve_scalar_root(const ScalarRootProblem& problem) {
  const auto m = static_cast<std::size_t>(problem.ytilde.size());
  if (problem.wtilde.size() != problem.ytilde.size()) {
    throw ConfigError("ytilde and wtilde must have the same length");
  }
  if (!problem.ytilde.allFinite() || !problem.wtilde.allFinite() || !std::isfinite(problem.c) ||
      !std::isfinite(problem.center)) {
    throw NumericalError("scalar root problem has non-finite inputs", "non-finite");
  }
  if (!(problem.window > 0.0)) throw ConfigError("window half-width must be positive", "window");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return problem.ytilde(a) < problem.ytilde(b); });
  std::vector<double> ys(m), ws(m);
  for (std::size_t s = 0; s < m; ++s) {
    ys[s] = problem.ytilde(order[s]);
    ws[s] = problem.wtilde(order[s]);
  }
  return solve_sorted(ys.data(), ws.data(), m, problem.c, problem.center, problem.window,
                      min_half_gap(ys.data(), m));
}

ScalarRootProblem reduce_entry_to_scalar(const MomentModel& model, const Eigen::VectorXd& b0, Eigen::Index j,
                                         Eigen::Index k, const Eigen::VectorXd& xi, std::optional<double> window) {
  const Dataset& d = model.data();
  if (j < 0 || j >= d.L() || k < 0 || k >= d.p()) throw ConfigError("entry index out of range");
  if (xi.size() != d.n()) throw ConfigError("multiplier vector has wrong length");
  const bool censored = model.family() == MomentFamily::kCensoredIvqr;
  const ColumnSetup col = setup_column(d.y(), d.x(), d.censor(), censored, b0, k, window);

  double dsum = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double ind = model.indicator(i, b0) ? 1.0 : 0.0;
    dsum += d.z()(i, j) * (ind + (xi(i) - 1.0) * model.offset());
  }
  double constant = 0.0;
  for (std::size_t r = 0; r < col.const_rows.size(); ++r) {
    const Eigen::Index i = col.const_rows[r];
    constant += xi(i) * d.z()(i, j) * col.const_value[r];
  }
  std::vector<double> ys, ws;
  double negative = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double sign = col.row_sign[static_cast<std::size_t>(i)];
    if (sign == 0.0) continue;
    const double w = sign * xi(i) * d.z()(i, j);
    if (w == 0.0) continue;
    if (sign < 0.0) negative += w;
    ys.push_back(col.row_y[static_cast<std::size_t>(i)]);
    ws.push_back(w);
  }
  ScalarRootProblem p;
  p.ytilde = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  p.wtilde = Eigen::Map<Eigen::VectorXd>(ws.data(), static_cast<Eigen::Index>(ws.size()));
  p.c = dsum - constant + negative;
  p.window = col.window;
  p.center = b0(k);
  return p;
}

EntryEstimate estimate_entry(const MomentModel& model, const Eigen::VectorXd& b0, Eigen::Index j, Eigen::Index k,
                             const JacobianOptions& options) {
  if (j < 0 || j >= model.L() || k < 0 || k >= model.p()) throw ConfigError("entry index out of range");
  JacobianOptions opts = options;
  opts.keep_draws = true;
  EngineResult r = run_engine(model, b0, {{j, k}}, opts);
  if (!r.failures[0].empty()) {
    if (r.failure_kind[0] == "degenerate-entry") throw DataError("entry " + entry_label(j, k) + ": " + r.failures[0], "degenerate-entry");
    throw NumericalError("entry " + entry_label(j, k) + ": " + r.failures[0], "zero-denominator");
  }
  return std::move(r.estimates[0]);
}

JacobianEstimate estimate_jacobian(const MomentModel& model, const Eigen::VectorXd& b0,
                                   const JacobianOptions& options) {
  const Eigen::Index L = model.L();
  const Eigen::Index p = model.p();
  std::vector<EntryKey> keys;
  for (Eigen::Index j = 0; j < L; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) keys.push_back({j, k});
  }
  EngineResult r = run_engine(model, b0, keys, options);

  JacobianEstimate out;
  out.matrix.gamma = Eigen::MatrixXd::Zero(L, p);
  std::string failed;
  for (std::size_t e = 0; e < keys.size(); ++e) {
    const auto [j, k] = keys[e];
    out.entries.push_back(r.estimates[e].diagnostics);
    if (options.keep_draws) out.draws.push_back(std::move(r.estimates[e].draws));
    if (!r.failures[e].empty()) {
      if (!failed.empty()) failed += "; ";
      failed += entry_label(j, k) + ": " + r.failures[e];
      continue;
    }
    out.matrix.gamma(j, k) = r.estimates[e].gamma;
    const auto& diag = r.estimates[e].diagnostics;
    if (diag.flagged * 20 > diag.draws) {
      std::ostringstream msg;
      msg << "entry " << entry_label(j, k) << ": " << diag.flagged << " of " << diag.draws
          << " draws hit the window boundary; consider a larger window";
      out.warnings.push_back(msg.str());
    }
  }
  if (!failed.empty()) {
    if (!options.permissive) throw NumericalError("non-estimable Jacobian entries: " + failed, "degenerate-entry");
    out.warnings.push_back("non-estimable entries set to zero: " + failed);
  }
  return out;
}

DensityEstimate bootstrap_density(const Eigen::VectorXd& y, double tau, const MultiplierScheme& scheme,
                                  int threads) {
  const Eigen::Index n = y.size();
  if (n < 2) throw DataError("density estimation needs at least two observations", "empty");
  if (y.maxCoeff() == y.minCoeff()) throw DataError("constant sample has no density", "degenerate-sample");
  QuantileSpec quantile(tau);

  std::vector<double> sorted(y.data(), y.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * tau));
  const double b0 = sorted[std::max<std::size_t>(rank, 1) - 1];

  auto data = std::make_shared<const Dataset>(y, Eigen::MatrixXd::Ones(n, 1), Eigen::MatrixXd::Ones(n, 1));
  const MomentModel model(data, quantile, MomentFamily::kIvqr);
  JacobianOptions opts;
  opts.scheme = scheme;
  opts.threads = threads;
  EntryEstimate e;
  try {
    e = estimate_entry(model, Eigen::VectorXd::Constant(1, b0), 0, 0, opts);
  } catch (const NumericalError& err) {
    if (err.kind() == "zero-denominator") throw DataError("zero bootstrap variance", "degenerate-sample");
    throw;
  }
  DensityEstimate out;
  out.b0 = b0;
  out.draws = e.diagnostics.draws;
  out.mean_scaled_square = static_cast<double>(n) * e.diagnostics.denominator;
  out.density = std::sqrt(tau * (1.0 - tau) / out.mean_scaled_square);
  return out;
}

JacobianMatrix kernel_jacobian_baseline(const MomentModel& model, const Eigen::VectorXd& b0) {
  const Dataset& d = model.data();
  const Eigen::Index n = d.n();
  if (n < 2) throw DataError("kernel baseline needs at least two observations", "empty");
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) e(i) = d.y()(i) - fitted(d.x(), i, b0);
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw NumericalError("residuals have zero spread; bandwidth undefined", "bandwidth");
  const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);

  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(d.L(), d.p());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double kern = normal_pdf(e(i) / h) / h;
    for (Eigen::Index j = 0; j < d.L(); ++j) {
      const double zk = kern * d.z()(i, j);
      for (Eigen::Index k = 0; k < d.p(); ++k) gamma(j, k) += zk * d.x()(i, k);
    }
  }
  return JacobianMatrix{gamma / static_cast<double>(n)};
}

}  // namespace ivqr::jacobian

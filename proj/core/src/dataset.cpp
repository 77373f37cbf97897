#include "ivqr/core_model/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ivqr/common/error.hpp"

namespace ivqr {

QuantileSpec::QuantileSpec(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ConfigError("quantile level tau must lie in (0,1), got " + std::to_string(tau), "tau");
  }
}

namespace {

std::vector<std::string> default_names(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) names.push_back(prefix + std::to_string(k + 1));
  return names;
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::MatrixXd x, Eigen::MatrixXd z,
                 std::vector<std::string> x_names, std::vector<std::string> z_names,
                 std::optional<Eigen::VectorXd> censor)
    : y_(std::move(y)),
      x_(std::move(x)),
      z_(std::move(z)),
      x_names_(std::move(x_names)),
      z_names_(std::move(z_names)),
      censor_(std::move(censor)) {
  const Eigen::Index n = y_.size();
  if (n < 1) throw DataError("dataset must contain at least one row", "empty");
  if (x_.rows() != n || z_.rows() != n) {
    throw DataError("row counts of y, x and z differ", "shape");
  }
  if (x_.cols() < 1 || z_.cols() < 1) throw DataError("x and z need at least one column", "shape");
  if (z_.cols() < x_.cols()) {
    throw DataError("under-identified: " + std::to_string(z_.cols()) + " instruments for " +
                        std::to_string(x_.cols()) + " regressors (need L >= p)",
                    "identification");
  }
  if (censor_ && censor_->size() != n) throw DataError("censoring vector has wrong length", "shape");
  if (!all_finite(y_) || !all_finite(x_) || !all_finite(z_) || (censor_ && !all_finite(*censor_))) {
    throw DataError("dataset contains non-finite values", "non-finite");
  }
  if (x_names_.empty()) x_names_ = default_names("x", x_.cols());
  if (z_names_.empty()) z_names_ = default_names("z", z_.cols());
  if (static_cast<Eigen::Index>(x_names_.size()) != x_.cols() ||
      static_cast<Eigen::Index>(z_names_.size()) != z_.cols()) {
    throw DataError("column name count does not match matrix width", "shape");
  }
}

Dataset Dataset::select_rows(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(m);
  Eigen::MatrixXd x(m, p());
  Eigen::MatrixXd z(m, L());
  std::optional<Eigen::VectorXd> c;
  if (censor_) c = Eigen::VectorXd(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    y(r) = y_(i);
    x.row(r) = x_.row(i);
    z.row(r) = z_.row(i);
    if (c) (*c)(r) = (*censor_)(i);
  }
  return Dataset(std::move(y), std::move(x), std::move(z), x_names_, z_names_, std::move(c));
}

Dataset Dataset::with_instruments(Eigen::MatrixXd z, std::vector<std::string> z_names) const {
  return Dataset(y_, x_, std::move(z), x_names_, std::move(z_names), censor_);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

double parse_cell(std::string_view cell, std::size_t row, const std::string& column,
                  const std::string& source) {
  const auto text = trim(cell);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw DataError(source + ": cannot parse cell '" + std::string(text) + "' at row " +
                        std::to_string(row) + ", column '" + column + "' as a finite number",
                    "parse");
  }
  return value;
}

}  // namespace

LoadedDataset parse_dataset(const std::string& csv_text, const ColumnRoles& roles, double tau,
                            const std::string& source_name) {
  QuantileSpec quantile(tau);
  if (roles.y.empty() || roles.x.empty() || roles.z.empty()) {
    throw ConfigError("column roles need a y column and at least one x and z column", "columns");
  }

  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(source_name + ": empty file", "parse");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

  std::unordered_map<std::string, std::size_t> header;
  std::vector<std::string> header_fields;
  for (const auto field : split_commas(line)) header_fields.emplace_back(trim(field));
  for (std::size_t k = 0; k < header_fields.size(); ++k) header.emplace(header_fields[k], k);
  auto column_index = [&](const std::string& name) {
    const auto it = header.find(name);
    if (it == header.end()) {
      throw DataError(source_name + ": missing column '" + name + "'", "missing-column");
    }
    return it->second;
  };

  const std::size_t y_col = column_index(roles.y);
  std::vector<std::size_t> x_cols, z_cols;
  for (const auto& name : roles.x) x_cols.push_back(column_index(name));
  for (const auto& name : roles.z) z_cols.push_back(column_index(name));
  std::optional<std::size_t> c_col;
  if (roles.censor) c_col = column_index(*roles.censor);

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header_fields.size()) {
      throw DataError(source_name + ": row " + std::to_string(row_number) + " has " +
                          std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(header_fields.size()),
                      "parse");
    }
    std::vector<double> parsed(fields.size(), 0.0);
    auto need = [&](std::size_t col) {
      parsed[col] = parse_cell(fields[col], row_number, header_fields[col], source_name);
    };
    need(y_col);
    for (auto col : x_cols) need(col);
    for (auto col : z_cols) need(col);
    if (c_col) need(*c_col);
    rows.push_back(std::move(parsed));
  }
  if (rows.empty()) throw DataError(source_name + ": no data rows", "empty");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(x_cols.size()));
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(z_cols.size()));
  std::optional<Eigen::VectorXd> c;
  if (c_col) c = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    y(i) = r[y_col];
    for (std::size_t k = 0; k < x_cols.size(); ++k) x(i, static_cast<Eigen::Index>(k)) = r[x_cols[k]];
    for (std::size_t k = 0; k < z_cols.size(); ++k) z(i, static_cast<Eigen::Index>(k)) = r[z_cols[k]];
    if (c) (*c)(i) = r[*c_col];
  }
  return LoadedDataset{Dataset(std::move(y), std::move(x), std::move(z), roles.x, roles.z, std::move(c)),
                       quantile};
}

LoadedDataset load_dataset(const std::filesystem::path& path, const ColumnRoles& roles, double tau) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open input file '" + path.string() + "'", "io");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_dataset(buffer.str(), roles, tau, path.string());
}

std::optional<Eigen::Index> find_intercept_column(const Eigen::MatrixXd& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    if ((z.col(j).array() == 1.0).all()) return j;
  }
  return std::nullopt;
}

StandardizedDataset standardize_instruments(const Dataset& data,
                                            std::optional<Eigen::Index> intercept_column) {
  const Eigen::Index L = data.L();
  const auto n = static_cast<double>(data.n());
  if (intercept_column && (*intercept_column < 0 || *intercept_column >= L)) {
    throw ConfigError("intercept column index out of range", "intercept");
  }

  std::vector<Eigen::Index> block;
  for (Eigen::Index j = 0; j < L; ++j) {
    if (!intercept_column || j != *intercept_column) block.push_back(j);
  }
  Eigen::MatrixXd transform = Eigen::MatrixXd::Identity(L, L);
  if (block.empty()) {
    return StandardizedDataset{data, InstrumentTransform{transform, intercept_column}};
  }

  const auto b = static_cast<Eigen::Index>(block.size());
  Eigen::MatrixXd zb(data.n(), b);
  for (Eigen::Index k = 0; k < b; ++k) zb.col(k) = data.z().col(block[static_cast<std::size_t>(k)]);
  const Eigen::MatrixXd second_moment = (zb.transpose() * zb) / n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second_moment);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  const double tolerance = 1e-12 * std::max(lambda_max, 1.0);
  if (!(lambda.minCoeff() > tolerance)) {
    // Name the columns loading on the null direction.
    const Eigen::VectorXd null_dir = eig.eigenvectors().col(0);
    std::string offenders;
    for (Eigen::Index k = 0; k < b; ++k) {
      if (std::abs(null_dir(k)) > 1e-6) {
        if (!offenders.empty()) offenders += ", ";
        offenders += data.z_names()[static_cast<std::size_t>(block[static_cast<std::size_t>(k)])];
      }
    }
    throw DataError("instrument block is rank deficient; offending columns: " + offenders, "singular");
  }
  const Eigen::MatrixXd inv_sqrt =
      eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();

  for (Eigen::Index r = 0; r < b; ++r) {
    for (Eigen::Index c = 0; c < b; ++c) {
      transform(block[static_cast<std::size_t>(r)], block[static_cast<std::size_t>(c)]) = inv_sqrt(r, c);
    }
  }
  Eigen::MatrixXd z_new = data.z() * transform.transpose();
  return StandardizedDataset{data.with_instruments(std::move(z_new), data.z_names()),
                             InstrumentTransform{std::move(transform), intercept_column}};
}

}  // namespace ivqr

#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ivqr {

/// Quantile level τ, validated to lie strictly inside (0,1).
class QuantileSpec {
 public:
  explicit QuantileSpec(double tau);
  double tau() const noexcept { return tau_; }

 private:
  double tau_;
};

/// Immutable estimation sample: outcome y (n), regressors x (n×p),
/// instruments z (n×L) and, for censored models, censoring points c (n).
class Dataset {
 public:
  /// Validates shapes, finiteness and L ≥ p. Throws DataError.
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x, Eigen::MatrixXd z,
          std::vector<std::string> x_names = {}, std::vector<std::string> z_names = {},
          std::optional<Eigen::VectorXd> censor = std::nullopt);

  Eigen::Index n() const noexcept { return y_.size(); }
  Eigen::Index p() const noexcept { return x_.cols(); }
  Eigen::Index L() const noexcept { return z_.cols(); }

  const Eigen::VectorXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const Eigen::MatrixXd& z() const noexcept { return z_; }
  const std::optional<Eigen::VectorXd>& censor() const noexcept { return censor_; }
  const std::vector<std::string>& x_names() const noexcept { return x_names_; }
  const std::vector<std::string>& z_names() const noexcept { return z_names_; }

  /// Rows in the given order (indices may repeat).
  Dataset select_rows(const std::vector<Eigen::Index>& rows) const;
  /// Same data with the instrument block replaced.
  Dataset with_instruments(Eigen::MatrixXd z, std::vector<std::string> z_names) const;

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
  Eigen::MatrixXd z_;
  std::vector<std::string> x_names_;
  std::vector<std::string> z_names_;
  std::optional<Eigen::VectorXd> censor_;
};

struct ColumnRoles {
  std::string y;
  std::vector<std::string> x;
  std::vector<std::string> z;
  std::optional<std::string> censor;
};

struct LoadedDataset {
  Dataset data;
  QuantileSpec quantile;
};

/// Reads a header-first, comma-separated file and binds named columns to
/// roles in the given order. A column may serve several roles.
LoadedDataset load_dataset(const std::filesystem::path& path, const ColumnRoles& roles, double tau);

/// Parses CSV text; exposed separately so callers holding the bytes in memory
/// do not need a temporary file.
LoadedDataset parse_dataset(const std::string& csv_text, const ColumnRoles& roles, double tau,
                            const std::string& source_name = "<memory>");

/// Linear map applied to instrument rows: z_new = transform * z_old.
struct InstrumentTransform {
  Eigen::MatrixXd transform;           // L×L
  std::optional<Eigen::Index> intercept_column;
};

struct StandardizedDataset {
  Dataset data;
  InstrumentTransform record;
};

/// Rescales the instrument block (excluding `intercept_column`, if given) so
/// that n⁻¹ Σ z zᵀ = I, using the symmetric inverse square root of the
/// empirical second-moment matrix. Throws DataError on rank deficiency.
StandardizedDataset standardize_instruments(const Dataset& data,
                                            std::optional<Eigen::Index> intercept_column = std::nullopt);

/// Index of the first instrument column that is identically 1, if any.
std::optional<Eigen::Index> find_intercept_column(const Eigen::MatrixXd& z);

}  // namespace ivqr

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "json.hpp"

#include "ivqr/estimator.hpp"
#include "ivqr/jacobian/jacobian.hpp"
#include "ivqr/kstep/operator.hpp"

namespace ivqr::cli {

using nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

json vector_json(const Eigen::VectorXd& v);
/// Row-major nested arrays.
json matrix_json(const Eigen::MatrixXd& m);
json trace_json(const kstep::IterationTrace& trace);
json jacobian_json(const jacobian::JacobianEstimate& estimate, const std::vector<std::string>& z_names,
                   const std::vector<std::string>& x_names);
json solver_json(const EstimatorResult& result);
/// β̃, V̂, coordinate intervals, joint sets and tests of β_S = 0.
json inference_json(const kstep::InferenceReport& report, const std::vector<std::string>& x_names);

/// Top-level envelope shared by every report.
json envelope(const std::string& command, const json& config_echo);

}  // namespace ivqr::cli

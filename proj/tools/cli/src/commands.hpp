#pragma once

#include <string>

#include "config.hpp"

namespace ivqr::cli {

json cmd_estimate(const RunConfig& config);
json cmd_jacobian(const RunConfig& config);
/// Writes the LP file to config.out and returns the summary.
json cmd_milp_export(const RunConfig& config);
json cmd_simulate(const RunConfig& config);

/// Aligned-text rendering of a simulate report.
std::string simulate_table(const json& report);

}  // namespace ivqr::cli

#pragma once

#include <filesystem>
#include <string>

#include "ivqr/milp/problem.hpp"

namespace ivqr::milp {

/// CPLEX LP text. Every variable appears in the objective (zero coefficients
/// included) so that parsing restores the column order; numbers use the
/// shortest round-trip decimal form, so write → parse → write is byte-stable.
std::string write_lp(const MilpProblem& problem);

/// Writes write_lp(problem) to `path`. Throws DataError on I/O failure.
void export_lp_file(const MilpProblem& problem, const std::filesystem::path& path);

/// Reads the subset of the LP format produced by write_lp (Minimize,
/// Subject To, Bounds, Binaries and End sections). Throws DataError
/// "lp-parse" with a line number on malformed input.
MilpProblem parse_lp(const std::string& text);

}  // namespace ivqr::milp

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lagvar/optimize.hpp"
#include "lagvar/serialize.hpp"

namespace lagvar::cli {

namespace exit_code {
constexpr int ok = 0;
constexpr int usage = 1;
constexpr int hypothesis_failure = 2;
constexpr int diverged = 3;
constexpr int guard = 4;  // GuardTriggered or SignatureChanged
constexpr int max_iter = 5;
constexpr int residual = 6;  // Converged, EL residual above --residual-tol
constexpr int all_rows_failed = 7;
}  // namespace exit_code

int solve_exit_code(SolveStatus status, bool residual_ok);

/// Entry point; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// plot.csv content for trajectory.csv rows of a model with m linear and n angle
/// coordinates.
std::string plot_csv(const CsvTable& table, int m, int n, const SingularSet& sigma);

/// Default quadrature node count for N modes: the power of two at or above
/// max(8N, 256).
int default_nodes(int modes);

}  // namespace lagvar::cli

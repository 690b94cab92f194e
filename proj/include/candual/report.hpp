#pragma once

#include "candual/auglag.hpp"
#include "candual/oracle.hpp"
#include "candual/problem_io.hpp"

#include <string>

namespace candual {

/// Caveat attached to every certification report.
inline constexpr const char* kConvexityCaveat =
    "certification assumes the positive-definite dual region is convex";

/// Fixed-width tables, 4 decimals, C locale, byte-stable for identical inputs.
/// Rows whose primal/dual gap exceeds the tolerance are flagged with '*'.
std::string render_solve_table(const std::vector<CriticalPoint>& points, double gap_tol);
std::string render_subproblem_table(const std::vector<AugCriticalPoint>& points,
                                    double gap_tol);
std::string render_outer_history(const OuterLoopResult& result);

nlohmann::json config_to_json(const SolverConfig& cfg);

/// Full-precision run report consumed by `oracle --against`.
nlohmann::json solve_report_json(const Problem& p, const SolverConfig& cfg,
                                 const SolveResult& result, double elapsed_ms);
nlohmann::json subproblem_report_json(const Problem& p, const SolverConfig& cfg,
                                      const VectorXd& mu0, double nu,
                                      const SubproblemResult& result, double elapsed_ms);
nlohmann::json outer_report_json(const Problem& p, const AugLagConfig& cfg,
                                 const OuterLoopResult& result, double elapsed_ms);

/// Reads back the fields of a solve report needed for cross-validation.
std::vector<CriticalPoint> points_from_report(const nlohmann::json& report);

}  // namespace candual

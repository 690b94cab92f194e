#pragma once

#include "candual/assembly.hpp"

#include <cstdint>

namespace candual {

enum class Classification {
  GlobalMinCertified,
  BiggestLocalMaxCertified,
  Saddle,
  DegenerateMultiplier,
  SingularG,
  Unclassified,
};

const char* to_string(Classification c);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Seed intervals, one per x coordinate and one per equality multiplier.
/// Vectors of size one broadcast across all coordinates.
struct SeedBox {
  std::vector<Interval> x{{-6.0, 6.0}};
  std::vector<Interval> mu{{-2.0, 2.0}};
};

struct SolverConfig {
  SeedBox seed_box;
  int grid_density = 15;        // seeds per axis
  int newton_max_iter = 100;
  double newton_tol = 1e-10;    // residual inf-norm
  double dedup_radius = 1e-6;   // relative, in (x, lambda, mu) space
  double mu_nonzero_tol = 1e-8;
  double psd_tol = 1e-8;        // eigenvalue threshold for definiteness tests

  void validate() const;
};

/// Cap on inequality count for explicit active-set enumeration (2^m branches).
inline constexpr int kActiveSetCap = 12;

struct ActiveSetExplosion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CriticalPoint {
  VectorXd x;
  DualPoint dual;
  double primal_value = 0.0;
  double dual_value = 0.0;  // falls back to xi1_value when G is singular
  double xi1_value = 0.0;
  VectorXd g_eigenvalues;   // ascending
  double kkt_residual_inf = 0.0;
  Classification classification = Classification::Unclassified;
};

struct SolveStats {
  long seeds = 0;
  long branches = 0;
  long converged = 0;
  long discarded_multiplier_sign = 0;
  long discarded_infeasible = 0;
  long deduplicated = 0;
};

struct SolveResult {
  std::vector<CriticalPoint> points;  // sorted by dual_value, then lexicographic x
  SolveStats stats;
};

/// Multistart damped Newton on the stationarity system of the total
/// complementarity function, extended with equality feasibility rows.
/// Inequalities are handled by explicit active-set enumeration: per branch,
/// either lambda_i = 0 (g_i(x) <= 0 checked afterwards) or g_i(x) = 0
/// (lambda_i >= 0 checked afterwards).
SolveResult solve_critical_points(const Problem& p, const SolverConfig& cfg);

/// Newton refinement from an explicit starting triple. The active set is
/// taken from `active` when given, otherwise from lambda > 0 in `d0`.
std::optional<CriticalPoint> refine_critical_point(
    const Problem& p, const VectorXd& x0, const DualPoint& d0,
    const SolverConfig& cfg, std::optional<std::uint32_t> active = std::nullopt);

Classification classify(const CriticalPoint& pt, const SolverConfig& cfg);

/// Max pairwise discrepancy among {primal_value, xi1_value, dual_value}.
double verify_gap(const CriticalPoint& pt);

/// Among GlobalMinCertified points, the one maximizing dual_value; ties break
/// toward lexicographically smaller x. Absent if none is certified.
std::optional<CriticalPoint> select_global(const std::vector<CriticalPoint>& points);

}  // namespace candual

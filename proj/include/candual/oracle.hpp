#pragma once

#include "candual/solver.hpp"

#include <functional>

namespace candual {

struct NoFeasiblePoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense evaluation grid. Equality constraints are relaxed to the band
/// |h_j| <= feas_tol and inequalities to g_i <= feas_tol; the band must be
/// wide enough for the grid spacing (caller's responsibility, reported back).
struct GridSpec {
  std::vector<std::pair<double, double>> box;  // per-coordinate closed intervals
  long points_per_axis = 3;
  double feas_tol = 1e-3;

  void validate(int n) const;  // also guards total size <= 1e8
};

struct GridMinimum {
  VectorXd x_best;
  double f_best = 0.0;
  long feas_count = 0;
};

/// Brute-force constrained minimum over the grid; deterministic tie-breaking
/// (lowest linear index wins). Throws NoFeasiblePoint when the relaxed
/// feasible set misses the grid entirely.
GridMinimum grid_constrained_min(const Problem& p, const GridSpec& gs);

/// Unconstrained scan of an arbitrary scalar field over the same kind of grid.
GridMinimum grid_scalar_min(const std::function<double(const VectorXd&)>& fn,
                            const std::vector<std::pair<double, double>>& box,
                            long points_per_axis);

/// Max over coordinates of |analytic_i - central_i| / (1 + |analytic_i|),
/// with per-coordinate step step_scale * (1 + |x_i|).
double fd_gradient_check(const std::function<double(const VectorXd&)>& fn,
                         const std::function<VectorXd(const VectorXd&)>& grad,
                         const VectorXd& x, double step_scale = 1e-5);

struct CrossValidation {
  bool contradicted = false;  // a certification is inconsistent with the grid
  double grid_min = 0.0;
  VectorXd grid_argmin;
  double budget = 0.0;
  std::vector<std::string> notes;
};

/// Checks solver certifications against the grid: no certified global minimum
/// may exceed the grid minimum by more than `budget`, and each certified
/// minimizer must be grid-locally stationary (no feasible grid neighbour of
/// its nearest grid point improves f by more than budget).
CrossValidation cross_validate(const Problem& p, const std::vector<CriticalPoint>& points,
                               const GridSpec& gs, double budget);

}  // namespace candual

#pragma once

#include "candual/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace candual::detail {

struct NewtonOutcome {
  VectorXd z;
  double residual_inf = 0.0;
  int iterations = 0;
};

/// Damped Newton on a square system: full step first, then backtracking on
/// the residual inf-norm (factor 0.5, at most 30 halvings). Residual
/// evaluations may throw DomainViolation; such trial points are treated as
/// rejected steps.
inline std::optional<NewtonOutcome> damped_newton(
    const std::function<VectorXd(const VectorXd&)>& residual,
    const std::function<MatrixXd(const VectorXd&)>& jacobian,
    VectorXd z, double tol, int max_iter) {
  constexpr int kMaxBacktracks = 30;

  auto safe_norm = [](const VectorXd& r) {
    const double v = r.cwiseAbs().maxCoeff();
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  VectorXd r;
  try {
    r = residual(z);
  } catch (const DomainViolation&) {
    return std::nullopt;
  }
  double rnorm = safe_norm(r);

  for (int it = 0; it < max_iter; ++it) {
    if (rnorm <= tol) return NewtonOutcome{std::move(z), rnorm, it};

    MatrixXd J;
    try {
      J = jacobian(z);
    } catch (const DomainViolation&) {
      return std::nullopt;
    }
    Eigen::FullPivLU<MatrixXd> lu(J);
    if (!lu.isInvertible()) return std::nullopt;
    const VectorXd dz = lu.solve(-r);
    if (!dz.allFinite()) return std::nullopt;

    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= kMaxBacktracks; ++bt) {
      const VectorXd z_try = z + step * dz;
      double rnorm_try = std::numeric_limits<double>::infinity();
      VectorXd r_try;
      try {
        r_try = residual(z_try);
        rnorm_try = safe_norm(r_try);
      } catch (const DomainViolation&) {
      }
      if (rnorm_try < rnorm) {
        z = z_try;
        r = std::move(r_try);
        rnorm = rnorm_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  if (rnorm <= tol) return NewtonOutcome{std::move(z), rnorm, max_iter};
  return std::nullopt;
}

/// Uniform per-axis grid: density points in [lo, hi] (midpoint for density 1;
/// density is >= 2 in validated configs).
inline std::vector<double> axis_grid(double lo, double hi, int density) {
  std::vector<double> g;
  g.reserve(density);
  if (density == 1) {
    g.push_back(0.5 * (lo + hi));
    return g;
  }
  for (int i = 0; i < density; ++i) {
    g.push_back(lo + (hi - lo) * static_cast<double>(i) / (density - 1));
  }
  return g;
}

/// Keeps multistart enumeration at desk scale.
inline void check_seed_budget(const std::vector<std::vector<double>>& axes) {
  double total = 1.0;
  for (const auto& axis : axes) total *= static_cast<double>(axis.size());
  if (total > 2e6) {
    throw DimensionError("seed grid exceeds 2e6 points; lower grid_density or the seed box");
  }
}

/// Odometer-style tensor product over per-axis grids; visit receives one
/// point per combination in a fixed deterministic order.
inline void for_each_grid_point(const std::vector<std::vector<double>>& axes,
                                const std::function<void(const VectorXd&)>& visit) {
  const int dims = static_cast<int>(axes.size());
  VectorXd pt(dims);
  std::vector<int> idx(dims, 0);
  while (true) {
    for (int a = 0; a < dims; ++a) pt[a] = axes[a][idx[a]];
    visit(pt);
    int a = dims - 1;
    while (a >= 0 && ++idx[a] == static_cast<int>(axes[a].size())) {
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

}  // namespace candual::detail

#include "candual/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace candual {

namespace {

double axis_value(const std::pair<double, double>& iv, long i, long ppa) {
  if (ppa == 1) return 0.5 * (iv.first + iv.second);
  return iv.first + (iv.second - iv.first) * static_cast<double>(i) /
         static_cast<double>(ppa - 1);
}

bool grid_feasible(const Problem& p, const VectorXd& x, double feas_tol) {
  for (const auto& t : p.h_terms()) {
    if (std::abs(eval_constraint(t, x)) > feas_tol) return false;
  }
  for (const auto& t : p.g_terms()) {
    if (eval_constraint(t, x) > feas_tol) return false;
  }
  return true;
}

// Visits every multi-index of the n-dimensional grid in linear-index order.
template <typename Visit>
void scan_grid(int n, long ppa, Visit&& visit) {
  std::vector<long> idx(n, 0);
  while (true) {
    visit(idx);
    int a = n - 1;
    while (a >= 0 && ++idx[a] == ppa) {
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

}  // namespace

void GridSpec::validate(int n) const {
  if (static_cast<int>(box.size()) != n) {
    throw DimensionError("grid box does not match problem dimension");
  }
  if (points_per_axis < 3) throw DimensionError("points_per_axis must be >= 3");
  if (!(feas_tol >= 0.0)) throw DimensionError("feas_tol must be >= 0");
  for (const auto& iv : box) {
    if (!(iv.first <= iv.second)) throw DimensionError("empty grid interval");
  }
  double total = 1.0;
  for (int k = 0; k < n; ++k) total *= static_cast<double>(points_per_axis);
  if (total > 1e8) throw DimensionError("grid exceeds 1e8 points");
}

GridMinimum grid_constrained_min(const Problem& p, const GridSpec& gs) {
  gs.validate(p.n());
  const int n = p.n();

  GridMinimum best;
  best.f_best = std::numeric_limits<double>::infinity();
  VectorXd x(n);
  scan_grid(n, gs.points_per_axis, [&](const std::vector<long>& idx) {
    for (int k = 0; k < n; ++k) x[k] = axis_value(gs.box[k], idx[k], gs.points_per_axis);
    if (!grid_feasible(p, x, gs.feas_tol)) return;
    ++best.feas_count;
    const double f = eval_objective(p, x);
    if (f < best.f_best) {
      best.f_best = f;
      best.x_best = x;
    }
  });
  if (best.feas_count == 0) {
    throw NoFeasiblePoint("no grid point satisfies the relaxed constraints");
  }
  return best;
}

GridMinimum grid_scalar_min(const std::function<double(const VectorXd&)>& fn,
                            const std::vector<std::pair<double, double>>& box,
                            long points_per_axis) {
  const int n = static_cast<int>(box.size());
  GridMinimum best;
  best.f_best = std::numeric_limits<double>::infinity();
  VectorXd x(n);
  scan_grid(n, points_per_axis, [&](const std::vector<long>& idx) {
    for (int k = 0; k < n; ++k) x[k] = axis_value(box[k], idx[k], points_per_axis);
    ++best.feas_count;
    const double f = fn(x);
    if (f < best.f_best) {
      best.f_best = f;
      best.x_best = x;
    }
  });
  return best;
}

double fd_gradient_check(const std::function<double(const VectorXd&)>& fn,
                         const std::function<VectorXd(const VectorXd&)>& grad,
                         const VectorXd& x, double step_scale) {
  const VectorXd g = grad(x);
  double worst = 0.0;
  VectorXd xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = step_scale * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const double central = (fn(xp) - fn(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
    worst = std::max(worst, std::abs(g[i] - central) / (1.0 + std::abs(g[i])));
  }
  return worst;
}

CrossValidation cross_validate(const Problem& p, const std::vector<CriticalPoint>& points,
                               const GridSpec& gs, double budget) {
  gs.validate(p.n());
  const int n = p.n();
  const GridMinimum gm = grid_constrained_min(p, gs);

  CrossValidation report;
  report.grid_min = gm.f_best;
  report.grid_argmin = gm.x_best;
  report.budget = budget;

  auto nearest_index = [&](double v, int axis) {
    const auto& iv = gs.box[axis];
    const double spacing =
        (iv.second - iv.first) / static_cast<double>(gs.points_per_axis - 1);
    long i = spacing > 0 ? std::lround((v - iv.first) / spacing) : 0;
    return std::clamp(i, 0L, gs.points_per_axis - 1);
  };
  auto node = [&](const std::vector<long>& idx) {
    VectorXd x(n);
    for (int k = 0; k < n; ++k) x[k] = axis_value(gs.box[k], idx[k], gs.points_per_axis);
    return x;
  };

  for (const auto& pt : points) {
    if (pt.classification != Classification::GlobalMinCertified) continue;

    if (gm.f_best < pt.primal_value - budget) {
      report.contradicted = true;
      report.notes.push_back("grid found a feasible value below a certified global minimum");
      continue;
    }

    // Locate the closest feasible grid node near the certified point, then
    // check its immediate neighbours.
    std::vector<long> center(n);
    for (int k = 0; k < n; ++k) center[k] = nearest_index(pt.x[k], k);
    std::vector<long> best_idx;
    double best_dist = std::numeric_limits<double>::infinity();
    std::vector<long> probe(n, -2);
    while (true) {
      std::vector<long> idx(n);
      bool ok = true;
      for (int k = 0; k < n; ++k) {
        idx[k] = center[k] + probe[k];
        if (idx[k] < 0 || idx[k] >= gs.points_per_axis) ok = false;
      }
      if (ok) {
        const VectorXd x = node(idx);
        if (grid_feasible(p, x, gs.feas_tol)) {
          const double dist = (x - pt.x).norm();
          if (dist < best_dist) {
            best_dist = dist;
            best_idx = idx;
          }
        }
      }
      int a = n - 1;
      while (a >= 0 && ++probe[a] == 3) {
        probe[a] = -2;
        --a;
      }
      if (a < 0) break;
    }
    if (best_idx.empty()) {
      report.notes.push_back("no feasible grid node near a certified point (resolution)");
      continue;
    }
    const double f_here = eval_objective(p, node(best_idx));
    std::vector<long> offs(n, -1);
    while (true) {
      std::vector<long> idx(n);
      bool ok = false, in_range = true;
      for (int k = 0; k < n; ++k) {
        idx[k] = best_idx[k] + offs[k];
        if (offs[k] != 0) ok = true;
        if (idx[k] < 0 || idx[k] >= gs.points_per_axis) in_range = false;
      }
      if (ok && in_range) {
        const VectorXd x = node(idx);
        if (grid_feasible(p, x, gs.feas_tol) && eval_objective(p, x) < f_here - budget) {
          report.contradicted = true;
          report.notes.push_back("certified minimizer is not grid-locally stationary");
          break;
        }
      }
      int a = n - 1;
      while (a >= 0 && ++offs[a] == 2) {
        offs[a] = -1;
        --a;
      }
      if (a < 0) break;
    }
  }
  if (!report.contradicted) report.notes.push_back("certification consistent with grid");
  return report;
}

}  // namespace candual

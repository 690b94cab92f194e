#include "candual/solver.hpp"

#include "newton_internal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace candual {

namespace {

// Variable layout of the square KKT system for one active-set branch:
//   z = [ x(n) | sigma_f(0/1) | sigma_g(m) | sigma_h(p) | mu(p) | lambda(m) ]
// Rows:
//   Gx - F                      n
//   sigma_f - V_f'(xi_f)        0/1
//   sigma_gi - V_gi'(xi_gi)     m
//   sigma_hj - V_hj'(xi_hj)     p
//   h_j(x)                      p
//   g_i(x) or lambda_i          m   (active / inactive)
struct Layout {
  int n, nf, m, p;
  int x0() const { return 0; }
  int sf() const { return n; }
  int sg() const { return n + nf; }
  int sh() const { return n + nf + m; }
  int mu() const { return n + nf + m + p; }
  int lm() const { return n + nf + m + 2 * p; }
  int size() const { return n + nf + 2 * m + 2 * p; }
};

DualPoint dual_from_z(const Problem& p, const Layout& L, const VectorXd& z) {
  DualPoint d;
  if (L.nf) d.sigma_f = z[L.sf()];
  d.sigma_g = z.segment(L.sg(), L.m);
  d.sigma_h = z.segment(L.sh(), L.p);
  d.mu = z.segment(L.mu(), L.p);
  d.lambda = z.segment(L.lm(), L.m);
  return d;
}

double checked_derivative(const CanonicalFunction& v, double xi) {
  if (!v.xi_in_domain(xi)) throw DomainViolation(v.kind() + ": xi outside domain");
  return v.derivative(xi);
}

VectorXd branch_residual(const Problem& p, const Layout& L, std::uint32_t active,
                         const VectorXd& z) {
  const VectorXd x = z.head(L.n);
  const DualPoint d = dual_from_z(p, L, z);
  const AssembledQuadratic aq = assemble(p, d);

  VectorXd r(L.size());
  r.head(L.n) = aq.G * x - aq.F;
  int row = L.n;
  if (L.nf) {
    r[row++] = *d.sigma_f - checked_derivative(*p.f_term()->v, p.f_term()->lambda_op(x));
  }
  for (int i = 0; i < L.m; ++i) {
    const auto& t = p.g_terms()[i];
    r[row++] = d.sigma_g[i] - checked_derivative(*t.v, t.lambda_op(x));
  }
  for (int j = 0; j < L.p; ++j) {
    const auto& t = p.h_terms()[j];
    r[row++] = d.sigma_h[j] - checked_derivative(*t.v, t.lambda_op(x));
  }
  for (int j = 0; j < L.p; ++j) r[row++] = eval_constraint(p.h_terms()[j], x);
  for (int i = 0; i < L.m; ++i) {
    r[row++] = (active >> i & 1u) ? eval_constraint(p.g_terms()[i], x) : d.lambda[i];
  }
  return r;
}

MatrixXd branch_jacobian(const Problem& p, const Layout& L, std::uint32_t active,
                         const VectorXd& z) {
  const VectorXd x = z.head(L.n);
  const DualPoint d = dual_from_z(p, L, z);
  const AssembledQuadratic aq = assemble(p, d);

  MatrixXd J = MatrixXd::Zero(L.size(), L.size());
  J.topLeftCorner(L.n, L.n) = aq.G;

  auto grad_of = [&x](const CanonicalTerm& t) { return t.lambda_op.gradient(x); };

  if (L.nf) {
    const auto& t = *p.f_term();
    const VectorXd gxi = grad_of(t);
    J.block(0, L.sf(), L.n, 1) = gxi;
    J.block(L.sf(), 0, 1, L.n) = -t.v->second_derivative(t.lambda_op(x)) * gxi.transpose();
    J(L.sf(), L.sf()) = 1.0;
  }
  for (int i = 0; i < L.m; ++i) {
    const auto& t = p.g_terms()[i];
    const VectorXd gxi = grad_of(t);
    const double xi = t.lambda_op(x);
    J.block(0, L.sg() + i, L.n, 1) = d.lambda[i] * gxi;
    J.block(0, L.lm() + i, L.n, 1) = d.sigma_g[i] * gxi;
    J.block(L.sg() + i, 0, 1, L.n) = -t.v->second_derivative(xi) * gxi.transpose();
    J(L.sg() + i, L.sg() + i) = 1.0;
    const int comp_row = L.n + L.nf + L.m + 2 * L.p + i;
    if (active >> i & 1u) {
      J.block(comp_row, 0, 1, L.n) = t.v->derivative(xi) * gxi.transpose();
    } else {
      J(comp_row, L.lm() + i) = 1.0;
    }
  }
  for (int j = 0; j < L.p; ++j) {
    const auto& t = p.h_terms()[j];
    const VectorXd gxi = grad_of(t);
    const double xi = t.lambda_op(x);
    J.block(0, L.sh() + j, L.n, 1) = d.mu[j] * gxi;
    J.block(0, L.mu() + j, L.n, 1) = d.sigma_h[j] * gxi;
    J.block(L.sh() + j, 0, 1, L.n) = -t.v->second_derivative(xi) * gxi.transpose();
    J(L.sh() + j, L.sh() + j) = 1.0;
    J.block(L.n + L.nf + L.m + L.p + j, 0, 1, L.n) = t.v->derivative(xi) * gxi.transpose();
  }
  return J;
}

struct Candidate {
  VectorXd x;
  DualPoint dual;
  double residual_inf = 0.0;
};

// Relative inf-distance in (x, lambda, mu) space.
bool same_point(const Candidate& a, const Candidate& b, double radius) {
  auto key = [](const Candidate& c) {
    VectorXd k(c.x.size() + c.dual.lambda.size() + c.dual.mu.size());
    k << c.x, c.dual.lambda, c.dual.mu;
    return k;
  };
  const VectorXd ka = key(a), kb = key(b);
  const double scale = 1.0 + std::max(ka.cwiseAbs().maxCoeff(), kb.cwiseAbs().maxCoeff());
  return (ka - kb).cwiseAbs().maxCoeff() <= radius * scale;
}

CriticalPoint make_point(const Problem& p, const SolverConfig& cfg, const VectorXd& x,
                         const DualPoint& d) {
  CriticalPoint pt;
  pt.x = x;
  pt.dual = d;
  pt.primal_value = eval_objective(p, x);
  pt.xi1_value = eval_xi1(p, x, d);
  const AssembledQuadratic aq = assemble(p, d);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(aq.G);
  pt.g_eigenvalues = es.eigenvalues();
  try {
    pt.dual_value = eval_dual(aq);
  } catch (const SingularG&) {
    pt.dual_value = pt.xi1_value;
  }
  pt.kkt_residual_inf = stationarity_residual(p, x, d).cwiseAbs().maxCoeff();
  pt.classification = classify(pt, cfg);
  return pt;
}

std::vector<Interval> broadcast(const std::vector<Interval>& box, int count,
                                const char* what) {
  if (count == 0) return {};
  if (static_cast<int>(box.size()) == count) return box;
  if (box.size() == 1) return std::vector<Interval>(count, box[0]);
  throw DimensionError(std::string(what) + " seed box does not match dimension");
}

void sort_points(std::vector<CriticalPoint>& pts) {
  std::sort(pts.begin(), pts.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    if (a.dual_value != b.dual_value) return a.dual_value < b.dual_value;
    return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(), b.x.end());
  });
}

}  // namespace

const char* to_string(Classification c) {
  switch (c) {
    case Classification::GlobalMinCertified: return "global_min_certified";
    case Classification::BiggestLocalMaxCertified: return "biggest_local_max_certified";
    case Classification::Saddle: return "saddle";
    case Classification::DegenerateMultiplier: return "degenerate_multiplier";
    case Classification::SingularG: return "singular_g";
    case Classification::Unclassified: return "unclassified";
  }
  return "unclassified";
}

void SolverConfig::validate() const {
  if (grid_density < 2) throw DimensionError("grid_density must be >= 2");
  if (!(newton_tol > 0) || !(dedup_radius > 0) || !(mu_nonzero_tol > 0) ||
      !(psd_tol > 0) || newton_max_iter < 1) {
    throw DimensionError("solver tolerances must be positive");
  }
  for (const auto& iv : seed_box.x) {
    if (!(iv.lo <= iv.hi)) throw DimensionError("empty seed interval");
  }
  for (const auto& iv : seed_box.mu) {
    if (!(iv.lo <= iv.hi)) throw DimensionError("empty seed interval");
  }
}

SolveResult solve_critical_points(const Problem& p, const SolverConfig& cfg) {
  cfg.validate();
  if (p.m() > kActiveSetCap) {
    throw ActiveSetExplosion("too many inequality constraints for active-set enumeration");
  }

  const Layout L{p.n(), p.f_term() ? 1 : 0, p.m(), p.p()};
  const auto x_box = broadcast(cfg.seed_box.x, p.n(), "x");
  const auto mu_box = broadcast(cfg.seed_box.mu, p.p(), "mu");

  std::vector<std::vector<double>> axes;
  for (const auto& iv : x_box) axes.push_back(detail::axis_grid(iv.lo, iv.hi, cfg.grid_density));
  for (const auto& iv : mu_box) axes.push_back(detail::axis_grid(iv.lo, iv.hi, cfg.grid_density));
  detail::check_seed_budget(axes);

  SolveResult result;
  std::vector<Candidate> found;
  const std::uint32_t branches = 1u << p.m();
  result.stats.branches = branches;

  for (std::uint32_t active = 0; active < branches; ++active) {
    auto residual = [&](const VectorXd& z) { return branch_residual(p, L, active, z); };
    auto jacobian = [&](const VectorXd& z) { return branch_jacobian(p, L, active, z); };

    detail::for_each_grid_point(axes, [&](const VectorXd& seed) {
      ++result.stats.seeds;
      VectorXd z = VectorXd::Zero(L.size());
      z.head(L.n) = seed.head(L.n);
      z.segment(L.mu(), L.p) = seed.tail(L.p);
      const VectorXd x0 = z.head(L.n);
      try {
        // The canonical maps are satisfied exactly at the seed.
        if (L.nf) z[L.sf()] = checked_derivative(*p.f_term()->v, p.f_term()->lambda_op(x0));
        for (int i = 0; i < L.m; ++i) {
          const auto& t = p.g_terms()[i];
          z[L.sg() + i] = checked_derivative(*t.v, t.lambda_op(x0));
        }
        for (int j = 0; j < L.p; ++j) {
          const auto& t = p.h_terms()[j];
          z[L.sh() + j] = checked_derivative(*t.v, t.lambda_op(x0));
        }
      } catch (const DomainViolation&) {
        return;
      }
      for (int i = 0; i < L.m; ++i) z[L.lm() + i] = (active >> i & 1u) ? 1.0 : 0.0;

      auto out = detail::damped_newton(residual, jacobian, std::move(z), cfg.newton_tol,
                                       cfg.newton_max_iter);
      if (!out) return;
      ++result.stats.converged;

      Candidate cand{out->z.head(L.n), dual_from_z(p, L, out->z), out->residual_inf};
      if ((cand.dual.lambda.array() < -cfg.newton_tol).any()) {
        ++result.stats.discarded_multiplier_sign;
        return;
      }
      for (int i = 0; i < L.m; ++i) {
        if (!(active >> i & 1u) &&
            eval_constraint(p.g_terms()[i], cand.x) > cfg.newton_tol) {
          ++result.stats.discarded_infeasible;
          return;
        }
      }
      for (auto& prev : found) {
        if (same_point(prev, cand, cfg.dedup_radius)) {
          ++result.stats.deduplicated;
          if (cand.residual_inf < prev.residual_inf) prev = std::move(cand);
          return;
        }
      }
      found.push_back(std::move(cand));
    });
  }

  result.points.reserve(found.size());
  for (const auto& cand : found) {
    result.points.push_back(make_point(p, cfg, cand.x, cand.dual));
  }
  sort_points(result.points);
  return result;
}

std::optional<CriticalPoint> refine_critical_point(const Problem& p, const VectorXd& x0,
                                                   const DualPoint& d0,
                                                   const SolverConfig& cfg,
                                                   std::optional<std::uint32_t> active) {
  cfg.validate();
  if (!d0.matches(p)) throw DimensionError("dual point does not match problem shape");
  const Layout L{p.n(), p.f_term() ? 1 : 0, p.m(), p.p()};

  std::uint32_t branch = 0;
  if (active) {
    branch = *active;
  } else {
    for (int i = 0; i < L.m; ++i) {
      if (d0.lambda[i] > 0.0) branch |= 1u << i;
    }
  }

  VectorXd z(L.size());
  z.head(L.n) = x0;
  if (L.nf) z[L.sf()] = *d0.sigma_f;
  z.segment(L.sg(), L.m) = d0.sigma_g;
  z.segment(L.sh(), L.p) = d0.sigma_h;
  z.segment(L.mu(), L.p) = d0.mu;
  z.segment(L.lm(), L.m) = d0.lambda;

  auto residual = [&](const VectorXd& zz) { return branch_residual(p, L, branch, zz); };
  auto jacobian = [&](const VectorXd& zz) { return branch_jacobian(p, L, branch, zz); };
  auto out = detail::damped_newton(residual, jacobian, std::move(z), cfg.newton_tol,
                                   cfg.newton_max_iter);
  if (!out) return std::nullopt;
  return make_point(p, cfg, out->z.head(L.n), dual_from_z(p, L, out->z));
}

Classification classify(const CriticalPoint& pt, const SolverConfig& cfg) {
  const double min_eig = pt.g_eigenvalues.minCoeff();
  const double max_eig = pt.g_eigenvalues.maxCoeff();

  if ((pt.g_eigenvalues.cwiseAbs().array() <= cfg.psd_tol).any()) {
    return Classification::SingularG;
  }
  if ((pt.dual.mu.cwiseAbs().array() < cfg.mu_nonzero_tol).any()) {
    return Classification::DegenerateMultiplier;
  }
  const bool lambda_ok = (pt.dual.lambda.array() >= -cfg.psd_tol).all();
  if (min_eig > cfg.psd_tol && (pt.dual.mu.array() > cfg.psd_tol).all() && lambda_ok) {
    return Classification::GlobalMinCertified;
  }
  if (max_eig < -cfg.psd_tol && (pt.dual.mu.array() < -cfg.psd_tol).all()) {
    return Classification::BiggestLocalMaxCertified;
  }
  if (min_eig < -cfg.psd_tol && max_eig > cfg.psd_tol) return Classification::Saddle;
  return Classification::Unclassified;
}

double verify_gap(const CriticalPoint& pt) {
  const double a = std::abs(pt.primal_value - pt.dual_value);
  const double b = std::abs(pt.primal_value - pt.xi1_value);
  const double c = std::abs(pt.xi1_value - pt.dual_value);
  return std::max({a, b, c});
}

std::optional<CriticalPoint> select_global(const std::vector<CriticalPoint>& points) {
  const CriticalPoint* best = nullptr;
  for (const auto& pt : points) {
    if (pt.classification != Classification::GlobalMinCertified) continue;
    if (!best || pt.dual_value > best->dual_value ||
        (pt.dual_value == best->dual_value &&
         std::lexicographical_compare(pt.x.begin(), pt.x.end(), best->x.begin(),
                                      best->x.end()))) {
      best = &pt;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace candual

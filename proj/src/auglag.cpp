#include "candual/auglag.hpp"

#include "newton_internal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace candual {

namespace {

void require_equality_only(const Problem& p) {
  if (p.m() > 0) {
    throw DimensionError("augmented form supports equality constraints only");
  }
  if (p.p() < 1) {
    throw DimensionError("augmented form needs at least one equality constraint");
  }
}

VectorXd broadcast_mu(const VectorXd& mu, int p) {
  if (mu.size() == p) return mu;
  if (mu.size() == 1) return VectorXd::Constant(p, mu[0]);
  throw DimensionError("multiplier vector does not match equality count");
}

double checked_derivative(const CanonicalFunction& v, double xi) {
  if (!v.xi_in_domain(xi)) throw DomainViolation(v.kind() + ": xi outside domain");
  return v.derivative(xi);
}

double checked_conjugate(const CanonicalFunction& v, double sigma) {
  if (!v.sigma_in_domain(sigma)) {
    throw DomainViolation(v.kind() + ": sigma outside conjugate domain");
  }
  return v.conjugate(sigma);
}

// Layout for the sub-problem system (mu fixed) and, when with_mu is set, for
// the full penalized dual (mu variable):
//   z = [ x(n) | sigma_f(0/1) | sigma_h(p) | tau(p) | mu(p if with_mu) ]
// Rows:
//   G x - F                                      n
//   sigma_f - V_f'(xi_f)                         0/1
//   sigma_hj - V_hj'(xi_hj)                      p
//   nu tau_j - (xi_hj sigma_hj - V_hj*(sigma_hj))  p
//   xi_hj sigma_hj - V_hj*(sigma_hj)             p   (only with_mu)
struct AugLayout {
  int n, nf, p;
  bool with_mu;
  int x0() const { return 0; }
  int sf() const { return n; }
  int sh() const { return n + nf; }
  int tau() const { return n + nf + p; }
  int mu() const { return n + nf + 2 * p; }
  int size() const { return n + nf + 2 * p + (with_mu ? p : 0); }
};

struct AugAssembled {
  MatrixXd G;
  VectorXd F;
  double k = 0.0;  // dual-only constant of the penalized Xi1
};

AugAssembled assemble_aug(const Problem& p, const VectorXd& weights,
                          std::optional<double> sigma_f, const VectorXd& sigma_h,
                          const VectorXd& tau, double nu) {
  AugAssembled aq;
  aq.G = p.A();
  aq.F = p.c();
  aq.k = 0.0;
  if (p.f_term()) {
    const auto& t = *p.f_term();
    aq.G += *sigma_f * t.lambda_op.Q();
    aq.F -= *sigma_f * t.lambda_op.b();
    aq.k += *sigma_f * t.lambda_op.alpha() - checked_conjugate(*t.v, *sigma_f);
  }
  for (int j = 0; j < p.p(); ++j) {
    const auto& t = p.h_terms()[j];
    const double w = weights[j];
    aq.G += w * sigma_h[j] * t.lambda_op.Q();
    aq.F -= w * sigma_h[j] * t.lambda_op.b();
    aq.k += w * (sigma_h[j] * t.lambda_op.alpha() - checked_conjugate(*t.v, sigma_h[j]));
  }
  aq.k -= 0.5 * nu * tau.squaredNorm();
  return aq;
}

VectorXd aug_residual(const Problem& p, const AugLayout& L, const VectorXd& mu_fixed,
                      double nu, const VectorXd& z) {
  const VectorXd x = z.head(L.n);
  const VectorXd sigma_h = z.segment(L.sh(), L.p);
  const VectorXd tau = z.segment(L.tau(), L.p);
  const VectorXd mu = L.with_mu ? VectorXd(z.segment(L.mu(), L.p)) : mu_fixed;
  const VectorXd weights = mu + tau;
  const std::optional<double> sf =
      L.nf ? std::optional<double>(z[L.sf()]) : std::nullopt;

  const AugAssembled aq = assemble_aug(p, weights, sf, sigma_h, tau, nu);
  VectorXd r(L.size());
  r.head(L.n) = aq.G * x - aq.F;
  int row = L.n;
  if (L.nf) {
    r[row++] = *sf - checked_derivative(*p.f_term()->v, p.f_term()->lambda_op(x));
  }
  for (int j = 0; j < L.p; ++j) {
    const auto& t = p.h_terms()[j];
    r[row++] = sigma_h[j] - checked_derivative(*t.v, t.lambda_op(x));
  }
  for (int j = 0; j < L.p; ++j) {
    const auto& t = p.h_terms()[j];
    const double pairing = t.lambda_op(x) * sigma_h[j] - checked_conjugate(*t.v, sigma_h[j]);
    r[row++] = nu * tau[j] - pairing;
  }
  if (L.with_mu) {
    for (int j = 0; j < L.p; ++j) {
      const auto& t = p.h_terms()[j];
      r[row++] = t.lambda_op(x) * sigma_h[j] - checked_conjugate(*t.v, sigma_h[j]);
    }
  }
  return r;
}

MatrixXd aug_jacobian(const Problem& p, const AugLayout& L, const VectorXd& mu_fixed,
                      double nu, const VectorXd& z) {
  const VectorXd x = z.head(L.n);
  const VectorXd sigma_h = z.segment(L.sh(), L.p);
  const VectorXd tau = z.segment(L.tau(), L.p);
  const VectorXd mu = L.with_mu ? VectorXd(z.segment(L.mu(), L.p)) : mu_fixed;
  const VectorXd weights = mu + tau;
  const std::optional<double> sf =
      L.nf ? std::optional<double>(z[L.sf()]) : std::nullopt;

  const AugAssembled aq = assemble_aug(p, weights, sf, sigma_h, tau, nu);
  MatrixXd J = MatrixXd::Zero(L.size(), L.size());
  J.topLeftCorner(L.n, L.n) = aq.G;

  if (L.nf) {
    const auto& t = *p.f_term();
    const VectorXd gxi = t.lambda_op.gradient(x);
    J.block(0, L.sf(), L.n, 1) = gxi;
    J.block(L.sf(), 0, 1, L.n) =
        -t.v->second_derivative(t.lambda_op(x)) * gxi.transpose();
    J(L.sf(), L.sf()) = 1.0;
  }
  for (int j = 0; j < L.p; ++j) {
    const auto& t = p.h_terms()[j];
    const VectorXd gxi = t.lambda_op.gradient(x);
    const double xi = t.lambda_op(x);
    const double conj_prime = t.v->conjugate_derivative(sigma_h[j]);

    J.block(0, L.sh() + j, L.n, 1) = weights[j] * gxi;
    J.block(0, L.tau() + j, L.n, 1) = sigma_h[j] * gxi;
    if (L.with_mu) J.block(0, L.mu() + j, L.n, 1) = sigma_h[j] * gxi;

    const int sh_row = L.n + L.nf + j;
    J.block(sh_row, 0, 1, L.n) = -t.v->second_derivative(xi) * gxi.transpose();
    J(sh_row, L.sh() + j) = 1.0;

    const int tau_row = L.n + L.nf + L.p + j;
    J.block(tau_row, 0, 1, L.n) = -sigma_h[j] * gxi.transpose();
    J(tau_row, L.sh() + j) = -xi + conj_prime;
    J(tau_row, L.tau() + j) = nu;

    if (L.with_mu) {
      const int mu_row = L.n + L.nf + 2 * L.p + j;
      J.block(mu_row, 0, 1, L.n) = sigma_h[j] * gxi.transpose();
      J(mu_row, L.sh() + j) = xi - conj_prime;
    }
  }
  return J;
}

struct AugCandidate {
  VectorXd z;
  double residual_inf = 0.0;
};

bool same_aug_point(const AugLayout& L, const VectorXd& a, const VectorXd& b,
                    double radius) {
  // Compare in (x, tau[, mu]) space; sigma is pinned by x.
  const int skip = L.nf;
  VectorXd ka(L.size() - L.p - skip), kb(ka.size());
  ka << a.head(L.n), a.tail(L.size() - L.n - L.nf - L.p);
  kb << b.head(L.n), b.tail(L.size() - L.n - L.nf - L.p);
  const double scale = 1.0 + std::max(ka.cwiseAbs().maxCoeff(), kb.cwiseAbs().maxCoeff());
  return (ka - kb).cwiseAbs().maxCoeff() <= radius * scale;
}

AugCriticalPoint make_aug_point(const Problem& p, const VectorXd& mu_k, double nu,
                                const SolverConfig& cfg, const AugLayout& L,
                                const VectorXd& z, double residual_inf) {
  AugCriticalPoint pt;
  pt.x = z.head(L.n);
  if (L.nf) pt.sigma_f = z[L.sf()];
  pt.sigma_h = z.segment(L.sh(), L.p);
  pt.tau = z.segment(L.tau(), L.p);
  pt.mu_plus_tau = mu_k + pt.tau;
  pt.kkt_residual_inf = residual_inf;

  const AugAssembled aq = assemble_aug(p, pt.mu_plus_tau, pt.sigma_f, pt.sigma_h, pt.tau, nu);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(aq.G);
  pt.g_eigenvalues = es.eigenvalues();
  pt.L_value = eval_auglag(p, pt.x, mu_k, nu);
  if (is_nonsingular(aq.G)) {
    const VectorXd xs = Eigen::FullPivLU<MatrixXd>(aq.G).solve(aq.F);
    pt.dual_value = -0.5 * aq.F.dot(xs) + aq.k;
  } else {
    // Stationary value through the converged x instead.
    pt.dual_value = 0.5 * pt.x.dot(aq.G * pt.x) - aq.F.dot(pt.x) + aq.k;
  }
  pt.classification = classify_subproblem(pt, cfg);
  return pt;
}

}  // namespace

void AugLagConfig::validate() const {
  if (!(nu0 > 0.0)) throw DimensionError("nu0 must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DimensionError("alpha must be in (0, 1)");
  if (max_outer_iter < 1) throw DimensionError("max_outer_iter must be >= 1");
  if (!(feasibility_tol > 0.0)) throw DimensionError("feasibility_tol must be > 0");
}

double eval_auglag(const Problem& p, const VectorXd& x, const VectorXd& mu, double nu) {
  require_equality_only(p);
  if (!(nu > 0.0)) throw DimensionError("penalty nu must be > 0");
  const VectorXd mu_b = broadcast_mu(mu, p.p());
  double value = eval_objective(p, x);
  double penalty = 0.0;
  for (int j = 0; j < p.p(); ++j) {
    const double hj = eval_constraint(p.h_terms()[j], x);
    value += mu_b[j] * hj;
    penalty += hj * hj;
  }
  return value + penalty / (2.0 * nu);
}

VectorXd auglag_gradient(const Problem& p, const VectorXd& x, const VectorXd& mu, double nu) {
  require_equality_only(p);
  if (!(nu > 0.0)) throw DimensionError("penalty nu must be > 0");
  const VectorXd mu_b = broadcast_mu(mu, p.p());
  VectorXd g = objective_gradient(p, x);
  for (int j = 0; j < p.p(); ++j) {
    const double hj = eval_constraint(p.h_terms()[j], x);
    g += (mu_b[j] + hj / nu) * constraint_gradient(p.h_terms()[j], x);
  }
  return g;
}

SubproblemResult solve_subproblem_dual(const Problem& p, const VectorXd& mu_k, double nu,
                                       const SolverConfig& cfg,
                                       const std::vector<VectorXd>& extra_x_seeds) {
  require_equality_only(p);
  if (!(nu > 0.0)) throw DimensionError("penalty nu must be > 0");
  cfg.validate();
  const VectorXd mu_b = broadcast_mu(mu_k, p.p());
  const AugLayout L{p.n(), p.f_term() ? 1 : 0, p.p(), false};

  const auto x_box = [&] {
    if (static_cast<int>(cfg.seed_box.x.size()) == p.n()) return cfg.seed_box.x;
    if (cfg.seed_box.x.size() == 1) return std::vector<Interval>(p.n(), cfg.seed_box.x[0]);
    throw DimensionError("x seed box does not match dimension");
  }();

  std::vector<std::vector<double>> axes;
  for (const auto& iv : x_box) axes.push_back(detail::axis_grid(iv.lo, iv.hi, cfg.grid_density));
  detail::check_seed_budget(axes);

  auto residual = [&](const VectorXd& z) { return aug_residual(p, L, mu_b, nu, z); };
  auto jacobian = [&](const VectorXd& z) { return aug_jacobian(p, L, mu_b, nu, z); };

  SubproblemResult result;
  result.stats.branches = 1;
  std::vector<AugCandidate> found;

  auto try_seed = [&](const VectorXd& x0) {
    ++result.stats.seeds;
    VectorXd z = VectorXd::Zero(L.size());
    z.head(L.n) = x0;
    try {
      // tau and sigma start on the canonical maps: sigma = V'(xi),
      // tau = h(x)/nu.
      if (L.nf) z[L.sf()] = checked_derivative(*p.f_term()->v, p.f_term()->lambda_op(x0));
      for (int j = 0; j < L.p; ++j) {
        const auto& t = p.h_terms()[j];
        z[L.sh() + j] = checked_derivative(*t.v, t.lambda_op(x0));
        z[L.tau() + j] = eval_constraint(t, x0) / nu;
      }
    } catch (const DomainViolation&) {
      return;
    }
    auto out = detail::damped_newton(residual, jacobian, std::move(z), cfg.newton_tol,
                                     cfg.newton_max_iter);
    if (!out) return;
    ++result.stats.converged;
    for (auto& prev : found) {
      if (same_aug_point(L, prev.z, out->z, cfg.dedup_radius)) {
        ++result.stats.deduplicated;
        if (out->residual_inf < prev.residual_inf) {
          prev = AugCandidate{std::move(out->z), out->residual_inf};
        }
        return;
      }
    }
    found.push_back(AugCandidate{std::move(out->z), out->residual_inf});
  };

  detail::for_each_grid_point(axes, try_seed);
  for (const auto& x0 : extra_x_seeds) {
    if (x0.size() != p.n()) throw DimensionError("extra seed dimension mismatch");
    try_seed(x0);
  }

  result.points.reserve(found.size());
  for (const auto& cand : found) {
    result.points.push_back(make_aug_point(p, mu_b, nu, cfg, L, cand.z, cand.residual_inf));
  }
  std::sort(result.points.begin(), result.points.end(),
            [](const AugCriticalPoint& a, const AugCriticalPoint& b) {
              if (a.dual_value != b.dual_value) return a.dual_value < b.dual_value;
              return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(),
                                                  b.x.end());
            });
  return result;
}

VectorXd subproblem_residual(const Problem& p, const VectorXd& x,
                             std::optional<double> sigma_f, const VectorXd& sigma_h,
                             const VectorXd& tau, const VectorXd& mu_k, double nu) {
  require_equality_only(p);
  if (!(nu > 0.0)) throw DimensionError("penalty nu must be > 0");
  if (sigma_f.has_value() != p.f_term().has_value()) {
    throw DimensionError("sigma_f presence does not match the objective term");
  }
  if (x.size() != p.n() || sigma_h.size() != p.p() || tau.size() != p.p()) {
    throw DimensionError("penalized dual point does not match problem shape");
  }
  const AugLayout L{p.n(), p.f_term() ? 1 : 0, p.p(), false};
  VectorXd z(L.size());
  z.head(L.n) = x;
  if (L.nf) z[L.sf()] = *sigma_f;
  z.segment(L.sh(), L.p) = sigma_h;
  z.segment(L.tau(), L.p) = tau;
  return aug_residual(p, L, broadcast_mu(mu_k, p.p()), nu, z);
}

Classification classify_subproblem(const AugCriticalPoint& pt, const SolverConfig& cfg) {
  const double min_eig = pt.g_eigenvalues.minCoeff();
  const double max_eig = pt.g_eigenvalues.maxCoeff();
  if ((pt.g_eigenvalues.cwiseAbs().array() <= cfg.psd_tol).any()) {
    return Classification::SingularG;
  }
  if ((pt.mu_plus_tau.cwiseAbs().array() < cfg.mu_nonzero_tol).any()) {
    return Classification::DegenerateMultiplier;
  }
  if (min_eig > cfg.psd_tol && (pt.mu_plus_tau.array() > cfg.psd_tol).all()) {
    return Classification::GlobalMinCertified;
  }
  if (max_eig < -cfg.psd_tol && (pt.mu_plus_tau.array() < -cfg.psd_tol).all()) {
    return Classification::BiggestLocalMaxCertified;
  }
  if (min_eig < -cfg.psd_tol && max_eig > cfg.psd_tol) return Classification::Saddle;
  return Classification::Unclassified;
}

std::vector<FullDualCriticalPoint> verify_tau_zero(const Problem& p, double nu,
                                                   const SolverConfig& cfg) {
  require_equality_only(p);
  if (!(nu > 0.0)) throw DimensionError("penalty nu must be > 0");
  cfg.validate();
  const AugLayout L{p.n(), p.f_term() ? 1 : 0, p.p(), true};

  const auto x_box = [&] {
    if (static_cast<int>(cfg.seed_box.x.size()) == p.n()) return cfg.seed_box.x;
    if (cfg.seed_box.x.size() == 1) return std::vector<Interval>(p.n(), cfg.seed_box.x[0]);
    throw DimensionError("x seed box does not match dimension");
  }();
  const auto mu_box = [&] {
    if (static_cast<int>(cfg.seed_box.mu.size()) == p.p()) return cfg.seed_box.mu;
    if (cfg.seed_box.mu.size() == 1) return std::vector<Interval>(p.p(), cfg.seed_box.mu[0]);
    throw DimensionError("mu seed box does not match dimension");
  }();

  std::vector<std::vector<double>> axes;
  for (const auto& iv : x_box) axes.push_back(detail::axis_grid(iv.lo, iv.hi, cfg.grid_density));
  for (const auto& iv : mu_box) axes.push_back(detail::axis_grid(iv.lo, iv.hi, cfg.grid_density));
  detail::check_seed_budget(axes);

  const VectorXd mu_unused;
  auto residual = [&](const VectorXd& z) { return aug_residual(p, L, mu_unused, nu, z); };
  auto jacobian = [&](const VectorXd& z) { return aug_jacobian(p, L, mu_unused, nu, z); };

  std::vector<VectorXd> found_z;
  std::vector<double> found_res;
  detail::for_each_grid_point(axes, [&](const VectorXd& seed) {
    VectorXd z = VectorXd::Zero(L.size());
    z.head(L.n) = seed.head(L.n);
    z.segment(L.mu(), L.p) = seed.tail(L.p);
    const VectorXd x0 = z.head(L.n);
    try {
      if (L.nf) z[L.sf()] = checked_derivative(*p.f_term()->v, p.f_term()->lambda_op(x0));
      for (int j = 0; j < L.p; ++j) {
        const auto& t = p.h_terms()[j];
        z[L.sh() + j] = checked_derivative(*t.v, t.lambda_op(x0));
        z[L.tau() + j] = eval_constraint(t, x0) / nu;
      }
    } catch (const DomainViolation&) {
      return;
    }
    auto out = detail::damped_newton(residual, jacobian, std::move(z), cfg.newton_tol,
                                     cfg.newton_max_iter);
    if (!out) return;
    for (size_t i = 0; i < found_z.size(); ++i) {
      if (same_aug_point(L, found_z[i], out->z, cfg.dedup_radius)) {
        if (out->residual_inf < found_res[i]) {
          found_z[i] = std::move(out->z);
          found_res[i] = out->residual_inf;
        }
        return;
      }
    }
    found_z.push_back(std::move(out->z));
    found_res.push_back(out->residual_inf);
  });

  std::vector<FullDualCriticalPoint> points;
  points.reserve(found_z.size());
  for (size_t i = 0; i < found_z.size(); ++i) {
    const VectorXd& z = found_z[i];
    FullDualCriticalPoint pt;
    pt.x = z.head(L.n);
    if (L.nf) pt.sigma_f = z[L.sf()];
    pt.sigma_h = z.segment(L.sh(), L.p);
    pt.tau = z.segment(L.tau(), L.p);
    pt.mu = z.segment(L.mu(), L.p);
    pt.tau_inf = pt.tau.size() ? pt.tau.cwiseAbs().maxCoeff() : 0.0;
    pt.kkt_residual_inf = found_res[i];
    points.push_back(std::move(pt));
  }
  std::sort(points.begin(), points.end(),
            [](const FullDualCriticalPoint& a, const FullDualCriticalPoint& b) {
              return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(),
                                                  b.x.end());
            });
  return points;
}

OuterLoopResult outer_loop(const Problem& p, const AugLagConfig& cfg,
                           const SolverConfig& scfg) {
  require_equality_only(p);
  cfg.validate();
  VectorXd mu = broadcast_mu(cfg.mu0, p.p());
  double nu = cfg.nu0;

  OuterLoopResult result;
  std::vector<VectorXd> warm;
  for (int k = 0; k < cfg.max_outer_iter; ++k) {
    const SubproblemResult sub = solve_subproblem_dual(p, mu, nu, scfg, warm);
    if (sub.points.empty()) {
      result.subproblem_failed = true;
      break;
    }

    const AugCriticalPoint* best = nullptr;
    for (const auto& pt : sub.points) {
      if (pt.classification != Classification::GlobalMinCertified) continue;
      if (!best || pt.dual_value > best->dual_value) best = &pt;
    }
    const bool certified = best != nullptr;
    if (!certified) {
      result.all_certified = false;
      for (const auto& pt : sub.points) {
        if (!best || pt.L_value < best->L_value) best = &pt;
      }
    }

    double h_inf = 0.0;
    for (int j = 0; j < p.p(); ++j) {
      h_inf = std::max(h_inf, std::abs(eval_constraint(p.h_terms()[j], best->x)));
    }
    result.history.push_back(
        {k, mu, nu, best->x, h_inf, best->L_value, best->dual_value, certified});

    if (h_inf <= cfg.feasibility_tol) {
      result.reached_feasibility = true;
      break;
    }
    mu = mu + best->tau;
    nu = cfg.alpha * nu;
    warm = {best->x};
  }
  // On feasibility the converged multipliers, otherwise the ones the next
  // iteration would use.
  result.final_mu = (result.reached_feasibility && !result.history.empty())
                        ? result.history.back().mu
                        : mu;
  return result;
}

}  // namespace candual

#include "candual/assembly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace candual {

namespace {

constexpr double kSingularRel = 1e-10;

double require_conjugate(const CanonicalFunction& v, double sigma) {
  if (!v.sigma_in_domain(sigma)) {
    throw DomainViolation(v.kind() + ": sigma outside conjugate domain");
  }
  return v.conjugate(sigma);
}

double smallest_singular_value(const MatrixXd& G) {
  // G is symmetric, so the singular values are |eigenvalues|.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

VectorXd solve_linear(const MatrixXd& G, const VectorXd& F) {
  // Symmetric factorization first, pivoted LU as the fallback near
  // indefiniteness.
  Eigen::LDLT<MatrixXd> ldlt(G);
  if (ldlt.info() == Eigen::Success) {
    VectorXd x = ldlt.solve(F);
    const double scale = 1.0 + F.cwiseAbs().maxCoeff();
    if ((G * x - F).cwiseAbs().maxCoeff() <= 1e-8 * scale) return x;
  }
  return Eigen::FullPivLU<MatrixXd>(G).solve(F);
}

}  // namespace

bool DualPoint::matches(const Problem& p) const {
  return sigma_f.has_value() == p.f_term().has_value() &&
         lambda.size() == p.m() && sigma_g.size() == p.m() &&
         mu.size() == p.p() && sigma_h.size() == p.p();
}

bool DualPoint::in_dual_feasible_set(double mu_nonzero_tol) const {
  if ((lambda.array() < 0.0).any()) return false;
  return (mu.cwiseAbs().array() >= mu_nonzero_tol).all();
}

AssembledQuadratic assemble(const Problem& p, const DualPoint& d) {
  if (!d.matches(p)) throw DimensionError("dual point does not match problem shape");

  AssembledQuadratic aq;
  aq.G = p.A();
  aq.F = p.c();
  aq.k = 0.0;

  auto add_term = [&aq](const CanonicalTerm& t, double weight, double sigma) {
    aq.G += weight * sigma * t.lambda_op.Q();
    aq.F -= weight * sigma * t.lambda_op.b();
    aq.k += weight * (sigma * t.lambda_op.alpha() - require_conjugate(*t.v, sigma));
  };

  if (p.f_term()) add_term(*p.f_term(), 1.0, *d.sigma_f);
  for (int i = 0; i < p.m(); ++i) add_term(p.g_terms()[i], d.lambda[i], d.sigma_g[i]);
  for (int j = 0; j < p.p(); ++j) add_term(p.h_terms()[j], d.mu[j], d.sigma_h[j]);
  return aq;
}

bool is_nonsingular(const MatrixXd& G) {
  const double tol = kSingularRel * (1.0 + G.cwiseAbs().maxCoeff());
  return smallest_singular_value(G) >= tol;
}

VectorXd primal_from_dual(const AssembledQuadratic& aq) {
  if (!is_nonsingular(aq.G)) {
    throw SingularG("G is singular: stationary x is not unique");
  }
  return solve_linear(aq.G, aq.F);
}

double eval_dual(const AssembledQuadratic& aq) {
  const VectorXd x = primal_from_dual(aq);
  return -0.5 * aq.F.dot(x) + aq.k;
}

double eval_dual(const Problem& p, const DualPoint& d) {
  return eval_dual(assemble(p, d));
}

double eval_xi1(const Problem& p, const VectorXd& x, const DualPoint& d) {
  if (x.size() != p.n()) throw DimensionError("x dimension mismatch");
  if (!d.matches(p)) throw DimensionError("dual point does not match problem shape");

  double xi1 = -(p.c().dot(x) - 0.5 * x.dot(p.A() * x));  // -U(x)
  auto add_term = [&xi1, &x](const CanonicalTerm& t, double weight, double sigma) {
    xi1 += weight * (t.lambda_op(x) * sigma - require_conjugate(*t.v, sigma));
  };
  if (p.f_term()) add_term(*p.f_term(), 1.0, *d.sigma_f);
  for (int i = 0; i < p.m(); ++i) add_term(p.g_terms()[i], d.lambda[i], d.sigma_g[i]);
  for (int j = 0; j < p.p(); ++j) add_term(p.h_terms()[j], d.mu[j], d.sigma_h[j]);
  return xi1;
}

VectorXd stationarity_residual(const Problem& p, const VectorXd& x, const DualPoint& d) {
  const AssembledQuadratic aq = assemble(p, d);
  const int n = p.n(), m = p.m(), pp = p.p();
  const int nf = p.f_term() ? 1 : 0;
  VectorXd r(n + nf + m + pp + pp + m);

  r.head(n) = aq.G * x - aq.F;
  int idx = n;
  if (p.f_term()) {
    r[idx++] = *d.sigma_f - p.f_term()->v->derivative(p.f_term()->lambda_op(x));
  }
  for (int i = 0; i < m; ++i) {
    r[idx++] = d.sigma_g[i] - p.g_terms()[i].v->derivative(p.g_terms()[i].lambda_op(x));
  }
  for (int j = 0; j < pp; ++j) {
    r[idx++] = d.sigma_h[j] - p.h_terms()[j].v->derivative(p.h_terms()[j].lambda_op(x));
  }
  for (int j = 0; j < pp; ++j) r[idx++] = eval_constraint(p.h_terms()[j], x);
  for (int i = 0; i < m; ++i) {
    r[idx++] = std::min(d.lambda[i], -eval_constraint(p.g_terms()[i], x));
  }
  return r;
}

}  // namespace candual

#pragma once

#include "candual/model.hpp"

namespace candual {

/// Thrown when G is singular under the relative tolerance below, i.e. the
/// dual point sits on the boundary where the stationary x is not unique.
struct SingularG : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full dual coordinate: multipliers (lambda, mu) plus the second-level
/// variables (sigma_f, sigma_g, sigma_h). sigma_f is absent iff the problem
/// has no canonical objective term.
struct DualPoint {
  std::optional<double> sigma_f;
  VectorXd lambda;   // m inequality multipliers
  VectorXd mu;       // p equality multipliers
  VectorXd sigma_g;  // m
  VectorXd sigma_h;  // p

  bool matches(const Problem& p) const;

  /// lambda_i >= 0 for all i and |mu_j| >= mu_nonzero_tol for all j.
  bool in_dual_feasible_set(double mu_nonzero_tol) const;
};

/// The x-quadratic structure of the total complementarity function:
///   Xi1(x, d) = 1/2 x'Gx - F'x + k   identically in x.
struct AssembledQuadratic {
  MatrixXd G;
  VectorXd F;
  double k = 0.0;
};

/// G = A + sigma_f Q_f + sum_i lambda_i sigma_gi Q_gi + sum_j mu_j sigma_hj Q_hj,
/// F = c - sigma_f b_f - sum_i lambda_i sigma_gi b_gi - sum_j mu_j sigma_hj b_hj,
/// k carries the operator constants with the same weights minus the weighted
/// conjugates.
AssembledQuadratic assemble(const Problem& p, const DualPoint& d);

/// Relative singularity rule: nonsingular iff the smallest singular value of
/// G is >= 1e-10 * (1 + max |G_ij|).
bool is_nonsingular(const MatrixXd& G);

/// x = G^{-1} F, the unique stationary point of Xi1 in x. Throws SingularG.
VectorXd primal_from_dual(const AssembledQuadratic& aq);

/// P^d(d) = -1/2 F'G^{-1}F + k. Throws SingularG.
double eval_dual(const Problem& p, const DualPoint& d);
double eval_dual(const AssembledQuadratic& aq);

double eval_xi1(const Problem& p, const VectorXd& x, const DualPoint& d);

/// Concatenated first-order residuals:
///   [ Gx - F | sigma_f - V_f'(xi_f) | sigma_gi - V_gi'(xi_gi)
///   | sigma_hj - V_hj'(xi_hj) | h_j(x) | min(lambda_i, -g_i(x)) ]
VectorXd stationarity_residual(const Problem& p, const VectorXd& x, const DualPoint& d);

}  // namespace candual

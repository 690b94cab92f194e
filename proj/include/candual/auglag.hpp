#pragma once

#include "candual/solver.hpp"

namespace candual {

/// Outer-loop controls. mu0 broadcasts from size 1 when the problem has more
/// than one equality constraint.
struct AugLagConfig {
  double nu0 = 5.0;             // initial penalty, > 0
  double alpha = 0.5;           // penalty shrink factor, in (0, 1)
  VectorXd mu0;                 // initial multipliers
  int max_outer_iter = 25;
  double feasibility_tol = 1e-6;  // stop when max_j |h_j(x)| falls below

  void validate() const;
};

/// L_nu(x, mu; nu) = f(x) + mu'h(x) + 1/(2 nu) ||h(x)||^2.
/// Equality constraints only; inequality terms are rejected.
double eval_auglag(const Problem& p, const VectorXd& x, const VectorXd& mu, double nu);
VectorXd auglag_gradient(const Problem& p, const VectorXd& x, const VectorXd& mu, double nu);

/// Critical point of the penalized total complementarity function in
/// (x, tau, sigma) for fixed multipliers mu_k and penalty nu.
struct AugCriticalPoint {
  VectorXd x;
  VectorXd tau;              // h_j(x)/nu at convergence
  std::optional<double> sigma_f;
  VectorXd sigma_h;
  VectorXd mu_plus_tau;
  double L_value = 0.0;
  double dual_value = 0.0;
  VectorXd g_eigenvalues;    // ascending
  double kkt_residual_inf = 0.0;
  Classification classification = Classification::Unclassified;
};

struct SubproblemResult {
  std::vector<AugCriticalPoint> points;  // sorted by dual_value, then lexicographic x
  SolveStats stats;
};

/// Enumerates critical points of the penalized dual for fixed mu_k.
/// `extra_x_seeds` augments the grid (used by the outer loop to warm-start
/// from the previous solution).
SubproblemResult solve_subproblem_dual(const Problem& p, const VectorXd& mu_k, double nu,
                                       const SolverConfig& cfg,
                                       const std::vector<VectorXd>& extra_x_seeds = {});

/// Residuals of the penalized stationarity system at an explicit
/// (x, sigma_f, sigma_h, tau) for fixed mu_k:
///   [ G x - F | sigma_f - V_f'(xi_f) | sigma_hj - V_hj'(xi_hj)
///   | nu tau_j - (xi_hj sigma_hj - V_hj*(sigma_hj)) ]
VectorXd subproblem_residual(const Problem& p, const VectorXd& x,
                             std::optional<double> sigma_f, const VectorXd& sigma_h,
                             const VectorXd& tau, const VectorXd& mu_k, double nu);

/// GlobalMinCertified iff min eig(G) > psd_tol and every (mu_k + tau)_j >
/// psd_tol; the mirrored test certifies the biggest local maximum.
Classification classify_subproblem(const AugCriticalPoint& pt, const SolverConfig& cfg);

/// Critical point of the full penalized dual with mu treated as a variable.
/// At any such point tau vanishes and (x, mu, sigma) solves the plain system.
struct FullDualCriticalPoint {
  VectorXd x;
  VectorXd mu;
  VectorXd tau;
  std::optional<double> sigma_f;
  VectorXd sigma_h;
  double tau_inf = 0.0;  // max_j |tau_j|
  double kkt_residual_inf = 0.0;
};

std::vector<FullDualCriticalPoint> verify_tau_zero(const Problem& p, double nu,
                                                   const SolverConfig& cfg);

struct OuterIterate {
  int k = 0;
  VectorXd mu;
  double nu = 0.0;
  VectorXd x;
  double h_inf = 0.0;
  double L_value = 0.0;
  double dual_value = 0.0;
  bool certified = false;  // sub-problem solution carried a global certificate
};

struct OuterLoopResult {
  std::vector<OuterIterate> history;
  VectorXd final_mu;
  bool reached_feasibility = false;
  bool all_certified = true;
  bool subproblem_failed = false;  // an iteration produced no critical point
};

/// Multiplier iteration: solve the sub-problem globally (certified point when
/// one exists, otherwise the lowest-L point with a flag), update
/// mu_{k+1} = mu_k + tau*, nu_{k+1} = alpha nu_k, stop at feasibility_tol or
/// max_outer_iter.
OuterLoopResult outer_loop(const Problem& p, const AugLagConfig& cfg,
                           const SolverConfig& scfg);

}  // namespace candual

#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace candual {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an argument leaves the domain of a canonical function or of
/// its conjugate.
struct DomainViolation : std::domain_error {
  using std::domain_error::domain_error;
};

/// Scalar quadratic map xi(x) = 1/2 x'Qx + b'x + alpha.
///
/// Q must be exactly symmetric; asymmetric input is rejected at construction
/// rather than silently symmetrized.
class QuadraticOperator {
 public:
  QuadraticOperator(MatrixXd Q, VectorXd b, double alpha);

  int dim() const { return static_cast<int>(b_.size()); }
  const MatrixXd& Q() const { return Q_; }
  const VectorXd& b() const { return b_; }
  double alpha() const { return alpha_; }

  double operator()(const VectorXd& x) const;
  VectorXd gradient(const VectorXd& x) const;  // Qx + b

 private:
  MatrixXd Q_;
  VectorXd b_;
  double alpha_ = 0.0;
};

/// A convex differentiable scalar function V with invertible gradient and a
/// closed-form Legendre conjugate V*. On their domains implementations must
/// satisfy
///
///   V(xi) + V*(V'(xi)) = xi * V'(xi)     (Fenchel-Young equality)
///   (V*)'(V'(xi))      = xi              (gradient inversion)
///
/// Convexity of V is the implementer's obligation; the test suite spot-checks
/// it by sampling.
class CanonicalFunction {
 public:
  virtual ~CanonicalFunction() = default;

  virtual double value(double xi) const = 0;
  virtual double derivative(double xi) const = 0;
  virtual double second_derivative(double xi) const = 0;
  virtual double conjugate(double sigma) const = 0;
  virtual double conjugate_derivative(double sigma) const = 0;
  virtual bool xi_in_domain(double xi) const = 0;
  virtual bool sigma_in_domain(double sigma) const = 0;
  virtual std::string kind() const = 0;

 protected:
  void require_xi(double xi) const;
  void require_sigma(double sigma) const;
};

using CanonicalFunctionPtr = std::shared_ptr<const CanonicalFunction>;

/// V(xi) = a/2 (xi - d)^2 + e with a > 0.
/// Conjugate: V*(sigma) = sigma^2/(2a) + d sigma - e, defined on all of R.
class ShiftedQuadratic final : public CanonicalFunction {
 public:
  ShiftedQuadratic(double a, double d, double e);

  double value(double xi) const override;
  double derivative(double xi) const override { return a_ * (xi - d_); }
  double second_derivative(double) const override { return a_; }
  double conjugate(double sigma) const override;
  double conjugate_derivative(double sigma) const override { return sigma / a_ + d_; }
  bool xi_in_domain(double) const override { return true; }
  bool sigma_in_domain(double) const override { return true; }
  std::string kind() const override { return "shifted_quadratic"; }

  double a() const { return a_; }
  double d() const { return d_; }
  double e() const { return e_; }

 private:
  double a_, d_, e_;
};

/// V(xi) = exp(xi). Conjugate: V*(sigma) = sigma ln(sigma) - sigma on sigma > 0.
class Exponential final : public CanonicalFunction {
 public:
  double value(double xi) const override;
  double derivative(double xi) const override;
  double second_derivative(double xi) const override;
  double conjugate(double sigma) const override;
  double conjugate_derivative(double sigma) const override;
  bool xi_in_domain(double) const override { return true; }
  bool sigma_in_domain(double sigma) const override { return sigma > 0.0; }
  std::string kind() const override { return "exponential"; }
};

/// One composite V(Lambda(x)), used as the objective's canonical term or as a
/// scalar constraint g(x) <= 0 / h(x) = 0.
struct CanonicalTerm {
  CanonicalFunctionPtr v;
  QuadraticOperator lambda_op;
};

/// min  f(x) = V_f(Lambda_f(x)) + 1/2 x'Ax - c'x
/// s.t. g_i(x) = V_gi(Lambda_gi(x)) <= 0,   i = 1..m
///      h_j(x) = V_hj(Lambda_hj(x))  = 0,   j = 1..p
///
/// Immutable after construction and safe to share across concurrent solver
/// runs. The canonical objective term is optional (a purely quadratic
/// objective has none); m = p = 0 is allowed.
class Problem {
 public:
  Problem(MatrixXd A, VectorXd c, std::optional<CanonicalTerm> f_term,
          std::vector<CanonicalTerm> g_terms, std::vector<CanonicalTerm> h_terms);

  int n() const { return static_cast<int>(c_.size()); }
  int m() const { return static_cast<int>(g_terms_.size()); }
  int p() const { return static_cast<int>(h_terms_.size()); }
  const MatrixXd& A() const { return A_; }
  const VectorXd& c() const { return c_; }
  const std::optional<CanonicalTerm>& f_term() const { return f_term_; }
  const std::vector<CanonicalTerm>& g_terms() const { return g_terms_; }
  const std::vector<CanonicalTerm>& h_terms() const { return h_terms_; }

 private:
  MatrixXd A_;
  VectorXd c_;
  std::optional<CanonicalTerm> f_term_;
  std::vector<CanonicalTerm> g_terms_;
  std::vector<CanonicalTerm> h_terms_;
};

double eval_operator(const QuadraticOperator& op, const VectorXd& x);

/// |V(xi) + V*(V'(xi)) - xi V'(xi)|; zero up to roundoff for a valid catalog
/// entry.
double conjugate_roundtrip_check(const CanonicalFunction& v, double xi);

double eval_constraint(const CanonicalTerm& term, const VectorXd& x);
VectorXd constraint_gradient(const CanonicalTerm& term, const VectorXd& x);

double eval_objective(const Problem& p, const VectorXd& x);
VectorXd objective_gradient(const Problem& p, const VectorXd& x);

}  // namespace candual

#include "candual/model.hpp"

#include <cmath>

namespace candual {

namespace {

void check_symmetric(const MatrixXd& M, const char* name) {
  if (M.rows() != M.cols()) {
    throw DimensionError(std::string(name) + " must be square");
  }
  if ((M - M.transpose()).cwiseAbs().maxCoeff() != 0.0) {
    throw DimensionError(std::string(name) + " must be exactly symmetric");
  }
}

}  // namespace

QuadraticOperator::QuadraticOperator(MatrixXd Q, VectorXd b, double alpha)
    : Q_(std::move(Q)), b_(std::move(b)), alpha_(alpha) {
  if (b_.size() < 1) throw DimensionError("operator dimension must be >= 1");
  check_symmetric(Q_, "operator Q");
  if (Q_.rows() != b_.size()) {
    throw DimensionError("operator Q and b dimensions differ");
  }
}

double QuadraticOperator::operator()(const VectorXd& x) const {
  if (x.size() != dim()) throw DimensionError("operator/vector dimension mismatch");
  return 0.5 * x.dot(Q_ * x) + b_.dot(x) + alpha_;
}

VectorXd QuadraticOperator::gradient(const VectorXd& x) const {
  if (x.size() != dim()) throw DimensionError("operator/vector dimension mismatch");
  return Q_ * x + b_;
}

void CanonicalFunction::require_xi(double xi) const {
  if (!xi_in_domain(xi)) {
    throw DomainViolation(kind() + ": xi outside domain");
  }
}

void CanonicalFunction::require_sigma(double sigma) const {
  if (!sigma_in_domain(sigma)) {
    throw DomainViolation(kind() + ": sigma outside conjugate domain");
  }
}

ShiftedQuadratic::ShiftedQuadratic(double a, double d, double e)
    : a_(a), d_(d), e_(e) {
  if (!(a > 0.0)) throw DomainViolation("shifted_quadratic: a must be > 0");
}

double ShiftedQuadratic::value(double xi) const {
  const double t = xi - d_;
  return 0.5 * a_ * t * t + e_;
}

double ShiftedQuadratic::conjugate(double sigma) const {
  return sigma * sigma / (2.0 * a_) + d_ * sigma - e_;
}

double Exponential::value(double xi) const { return std::exp(xi); }
double Exponential::derivative(double xi) const { return std::exp(xi); }
double Exponential::second_derivative(double xi) const { return std::exp(xi); }

double Exponential::conjugate(double sigma) const {
  require_sigma(sigma);
  return sigma * std::log(sigma) - sigma;
}

double Exponential::conjugate_derivative(double sigma) const {
  require_sigma(sigma);
  return std::log(sigma);
}

Problem::Problem(MatrixXd A, VectorXd c, std::optional<CanonicalTerm> f_term,
                 std::vector<CanonicalTerm> g_terms, std::vector<CanonicalTerm> h_terms)
    : A_(std::move(A)),
      c_(std::move(c)),
      f_term_(std::move(f_term)),
      g_terms_(std::move(g_terms)),
      h_terms_(std::move(h_terms)) {
  if (c_.size() < 1) throw DimensionError("problem dimension must be >= 1");
  check_symmetric(A_, "A");
  if (A_.rows() != c_.size()) throw DimensionError("A and c dimensions differ");
  auto check_term = [&](const CanonicalTerm& t, const char* what) {
    if (!t.v) throw DimensionError(std::string(what) + ": missing canonical function");
    if (t.lambda_op.dim() != n()) {
      throw DimensionError(std::string(what) + ": operator dimension != problem dimension");
    }
  };
  if (f_term_) check_term(*f_term_, "objective term");
  for (const auto& t : g_terms_) check_term(t, "inequality term");
  for (const auto& t : h_terms_) check_term(t, "equality term");
}

double eval_operator(const QuadraticOperator& op, const VectorXd& x) {
  return op(x);
}

double conjugate_roundtrip_check(const CanonicalFunction& v, double xi) {
  if (!v.xi_in_domain(xi)) throw DomainViolation(v.kind() + ": xi outside domain");
  const double sigma = v.derivative(xi);
  return std::abs(v.value(xi) + v.conjugate(sigma) - xi * sigma);
}

double eval_constraint(const CanonicalTerm& term, const VectorXd& x) {
  const double xi = term.lambda_op(x);
  if (!term.v->xi_in_domain(xi)) {
    throw DomainViolation(term.v->kind() + ": xi outside domain");
  }
  return term.v->value(xi);
}

VectorXd constraint_gradient(const CanonicalTerm& term, const VectorXd& x) {
  const double xi = term.lambda_op(x);
  if (!term.v->xi_in_domain(xi)) {
    throw DomainViolation(term.v->kind() + ": xi outside domain");
  }
  return term.v->derivative(xi) * term.lambda_op.gradient(x);
}

double eval_objective(const Problem& p, const VectorXd& x) {
  if (x.size() != p.n()) throw DimensionError("objective/vector dimension mismatch");
  double f = 0.5 * x.dot(p.A() * x) - p.c().dot(x);
  if (p.f_term()) f += eval_constraint(*p.f_term(), x);
  return f;
}

VectorXd objective_gradient(const Problem& p, const VectorXd& x) {
  if (x.size() != p.n()) throw DimensionError("objective/vector dimension mismatch");
  VectorXd g = p.A() * x - p.c();
  if (p.f_term()) g += constraint_gradient(*p.f_term(), x);
  return g;
}

}  // namespace candual

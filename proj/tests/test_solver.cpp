#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "candual/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

using namespace candual;

namespace {

VectorXd vec1(double v) {
  VectorXd x(1);
  x << v;
  return x;
}

QuadraticOperator half_x_squared() {
  return QuadraticOperator(MatrixXd::Identity(1, 1), VectorXd::Zero(1), 0.0);
}

Problem example1() {
  CanonicalTerm h{std::make_shared<ShiftedQuadratic>(1.0, 6.0, -15.0), half_x_squared()};
  return Problem(MatrixXd::Identity(1, 1), VectorXd::Ones(1), std::nullopt, {}, {h});
}

// min 1/2 x^2 - 3x  s.t.  |x| <= 1 encoded as 1/2 x^2 - 1/2 <= 0 over the
// linear operator x. Unique KKT point: x = 1, lambda = 2.
Problem slab_1d() {
  CanonicalTerm g{std::make_shared<ShiftedQuadratic>(1.0, 0.0, -0.5),
                  QuadraticOperator(MatrixXd::Zero(1, 1), VectorXd::Ones(1), 0.0)};
  return Problem(MatrixXd::Identity(1, 1), vec1(3.0), std::nullopt, {g}, {});
}

// min 1/2 |x|^2 - (3,3)'x  s.t.  x1 + x2 in [-2, 2]. Active solution (1, 1)
// with lambda = 1 and dual value -5.
Problem slab_2d() {
  VectorXd c(2), b(2);
  c << 3, 3;
  b << 1, 1;
  CanonicalTerm g{std::make_shared<ShiftedQuadratic>(1.0, 0.0, -2.0),
                  QuadraticOperator(MatrixXd::Zero(2, 2), b, 0.0)};
  return Problem(MatrixXd::Identity(2, 2), c, std::nullopt, {g}, {});
}

// Symmetric unconstrained double well 1/2 (x^2/2 - 2)^2: minima at x = +-2,
// where the dual coordinate sits exactly on the G = 0 boundary.
Problem symmetric_two_well() {
  CanonicalTerm f{std::make_shared<ShiftedQuadratic>(1.0, 2.0, 0.0), half_x_squared()};
  return Problem(MatrixXd::Zero(1, 1), VectorXd::Zero(1), f, {}, {});
}

struct TableRow {
  double x, mu, sigma, f, pd, g;
};

// Four critical points of the equality fixture, 2-3 published decimals.
const std::vector<TableRow> kTable1{
    {1.023, 0.004, -5.48, -0.5, -0.5, 0.98},
    {-1.023, 0.36, -5.48, 1.55, 1.55, -0.98},
    {4.791, -0.14, 5.48, 6.69, 6.69, 0.21},
    {-4.791, -0.22, 5.48, 16.27, 16.27, -0.21},
};

const CriticalPoint* match_row(const std::vector<CriticalPoint>& pts, const TableRow& row,
                               double tol) {
  for (const auto& pt : pts) {
    if (std::abs(pt.x[0] - row.x) <= tol && std::abs(pt.dual.mu[0] - row.mu) <= tol &&
        std::abs(pt.dual.sigma_h[0] - row.sigma) <= tol &&
        std::abs(pt.primal_value - row.f) <= tol && std::abs(pt.dual_value - row.pd) <= tol &&
        std::abs(pt.g_eigenvalues[0] - row.g) <= tol) {
      return &pt;
    }
  }
  return nullptr;
}

}  // namespace

TEST_CASE("equality fixture: four critical points matching the table") {
  const Problem p = example1();
  const SolveResult result = solve_critical_points(p, SolverConfig{});

  REQUIRE(result.points.size() == 4);
  for (const auto& row : kTable1) CHECK(match_row(result.points, row, 0.01) != nullptr);
  for (const auto& pt : result.points) {
    CHECK(pt.kkt_residual_inf <= 1e-10);
    CHECK(verify_gap(pt) <= 1e-6 * (1.0 + std::abs(pt.primal_value)));
  }
}

TEST_CASE("equality fixture: classifications") {
  const SolveResult result = solve_critical_points(example1(), SolverConfig{});
  REQUIRE(result.points.size() == 4);
  // Sorted by dual value: -0.5, 1.55, 6.69, 16.27.
  CHECK(result.points[0].classification == Classification::GlobalMinCertified);
  CHECK(result.points[1].classification == Classification::Unclassified);
  CHECK(result.points[2].classification == Classification::Unclassified);
  CHECK(result.points[3].classification == Classification::BiggestLocalMaxCertified);
}

TEST_CASE("classify follows the sign conditions") {
  SolverConfig cfg;
  auto point_with = [](double eig, double mu) {
    CriticalPoint pt;
    pt.g_eigenvalues = vec1(eig);
    pt.dual.mu = vec1(mu);
    pt.dual.lambda = VectorXd(0);
    return pt;
  };
  CHECK(classify(point_with(0.98, 0.004), cfg) == Classification::GlobalMinCertified);
  CHECK(classify(point_with(-0.21, -0.22), cfg) == Classification::BiggestLocalMaxCertified);
  CHECK(classify(point_with(0.21, -0.14), cfg) == Classification::Unclassified);
  CHECK(classify(point_with(-0.98, 0.36), cfg) == Classification::Unclassified);
  CHECK(classify(point_with(1.0, 1e-9), cfg) == Classification::DegenerateMultiplier);
  CHECK(classify(point_with(1e-9, 1.0), cfg) == Classification::SingularG);

  CriticalPoint saddle;
  saddle.g_eigenvalues = VectorXd(2);
  saddle.g_eigenvalues << -1.0, 1.0;
  saddle.dual.mu = vec1(1.0);
  saddle.dual.lambda = VectorXd(0);
  CHECK(classify(saddle, cfg) == Classification::Saddle);

  CriticalPoint neg_lambda = point_with(1.0, 1.0);
  neg_lambda.dual.lambda = vec1(-0.5);
  CHECK(classify(neg_lambda, cfg) != Classification::GlobalMinCertified);
}

TEST_CASE("unconstrained convex QP has the single closed-form point") {
  MatrixXd A(2, 2);
  A << 2, 0, 0, 2;
  VectorXd c(2);
  c << 1, 1;
  const Problem p(A, c, std::nullopt, {}, {});
  const SolveResult result = solve_critical_points(p, SolverConfig{});
  REQUIRE(result.points.size() == 1);
  CHECK((result.points[0].x - A.ldlt().solve(c)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(result.points[0].classification == Classification::GlobalMinCertified);
  CHECK(verify_gap(result.points[0]) <= 1e-10);
}

TEST_CASE("active-set enumeration on the 1-D slab") {
  const SolveResult result = solve_critical_points(slab_1d(), SolverConfig{});
  // Inactive branch converges to x = 3 (infeasible, discarded); active branch
  // at x = -1 gets lambda = -4 (discarded). Exactly the KKT-consistent point
  // remains.
  REQUIRE(result.points.size() == 1);
  const CriticalPoint& pt = result.points[0];
  CHECK(pt.x[0] == doctest::Approx(1.0));
  CHECK(pt.dual.lambda[0] == doctest::Approx(2.0));
  CHECK(pt.dual.sigma_g[0] == doctest::Approx(1.0));
  CHECK(pt.primal_value == doctest::Approx(-2.5));
  CHECK(pt.dual_value == doctest::Approx(-2.5));
  CHECK(pt.classification == Classification::GlobalMinCertified);
  CHECK(result.stats.discarded_multiplier_sign > 0);
  CHECK(result.stats.discarded_infeasible > 0);
}

TEST_CASE("active-set enumeration on the 2-D slab") {
  SolverConfig cfg;
  cfg.grid_density = 7;
  const SolveResult result = solve_critical_points(slab_2d(), cfg);
  REQUIRE(result.points.size() == 1);
  const CriticalPoint& pt = result.points[0];
  CHECK(pt.x[0] == doctest::Approx(1.0));
  CHECK(pt.x[1] == doctest::Approx(1.0));
  CHECK(pt.dual.lambda[0] == doctest::Approx(1.0));
  CHECK(pt.primal_value == doctest::Approx(-5.0));
  CHECK(pt.dual_value == doctest::Approx(-5.0));
  CHECK(pt.classification == Classification::GlobalMinCertified);
}

TEST_CASE("interior optimum keeps the inequality inactive") {
  // Same slab but with the unconstrained optimum inside: c = 0.3.
  CanonicalTerm g{std::make_shared<ShiftedQuadratic>(1.0, 0.0, -0.5),
                  QuadraticOperator(MatrixXd::Zero(1, 1), VectorXd::Ones(1), 0.0)};
  const Problem p(MatrixXd::Identity(1, 1), vec1(0.3), std::nullopt, {g}, {});
  const SolveResult result = solve_critical_points(p, SolverConfig{});
  REQUIRE(result.points.size() == 1);
  CHECK(result.points[0].x[0] == doctest::Approx(0.3));
  CHECK(result.points[0].dual.lambda[0] == 0.0);
  CHECK(result.points[0].classification == Classification::GlobalMinCertified);
}

TEST_CASE("multiplier sign convention: mu = -f'(x)/h'(x) at every point") {
  const Problem p = example1();
  const SolveResult result = solve_critical_points(p, SolverConfig{});
  REQUIRE(result.points.size() == 4);
  for (const auto& pt : result.points) {
    const double fp = objective_gradient(p, pt.x)[0];
    const double hp = constraint_gradient(p.h_terms()[0], pt.x)[0];
    REQUIRE(std::abs(hp) > 1e-6);
    CHECK(pt.dual.mu[0] == doctest::Approx(-fp / hp).epsilon(1e-8));
  }
}

TEST_CASE("symmetric two-well: both minima returned ahead of selection") {
  SolverConfig cfg;
  const SolveResult result = solve_critical_points(symmetric_two_well(), cfg);
  // x = +-2 sit exactly on the singular-G boundary; x = 0 is the separating
  // maximum with G = -2.
  REQUIRE(result.points.size() == 3);
  std::vector<double> xs;
  for (const auto& pt : result.points) xs.push_back(pt.x[0]);
  std::sort(xs.begin(), xs.end());
  CHECK(xs[0] == doctest::Approx(-2.0));
  CHECK(xs[1] == doctest::Approx(0.0));
  CHECK(xs[2] == doctest::Approx(2.0));
  int singular = 0;
  for (const auto& pt : result.points) {
    if (pt.classification == Classification::SingularG) ++singular;
  }
  CHECK(singular == 2);
  CHECK(!select_global(result.points).has_value());
}

TEST_CASE("select_global picks the max-dual certified point") {
  const SolveResult result = solve_critical_points(example1(), SolverConfig{});
  const auto global = select_global(result.points);
  REQUIRE(global.has_value());
  CHECK(global->dual_value == doctest::Approx(-0.5).epsilon(1e-2));
  CHECK(global->x[0] == doctest::Approx(1.0225).epsilon(1e-3));

  CHECK(!select_global({}).has_value());
}

TEST_CASE("select_global tie-breaking on synthetic duplicates") {
  auto certified = [](double x, double dual) {
    CriticalPoint pt;
    pt.x = vec1(x);
    pt.dual_value = dual;
    pt.classification = Classification::GlobalMinCertified;
    return pt;
  };
  std::vector<CriticalPoint> pts{certified(2.0, -1.0), certified(-2.0, -1.0),
                                 certified(0.5, -3.0)};
  const auto sel = select_global(pts);
  REQUIRE(sel.has_value());
  // Max dual first, then lexicographically smaller x among ties.
  CHECK(sel->dual_value == -1.0);
  CHECK(sel->x[0] == -2.0);

  pts.push_back(certified(9.0, 4.0));
  CHECK(select_global(pts)->dual_value == 4.0);
}

TEST_CASE("refinement reconverges from perturbed table rows") {
  const Problem p = example1();
  SolverConfig cfg;
  const SolveResult result = solve_critical_points(p, cfg);
  REQUIRE(result.points.size() == 4);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> noise(-1e-2, 1e-2);
  for (const auto& pt : result.points) {
    DualPoint d0 = pt.dual;
    d0.mu[0] += noise(rng);
    d0.sigma_h[0] += noise(rng);
    const VectorXd x0 = pt.x + vec1(noise(rng));
    const auto refined = refine_critical_point(p, x0, d0, cfg);
    REQUIRE(refined.has_value());
    CHECK(std::abs(refined->x[0] - pt.x[0]) <= 1e-8);
    CHECK(std::abs(refined->dual.mu[0] - pt.dual.mu[0]) <= 1e-8);
  }
}

TEST_CASE("exponential objective term through the full pipeline") {
  // min exp(x) + 1/2 x^2: unique stationary point at x = -W(1).
  CanonicalTerm f{std::make_shared<Exponential>(),
                  QuadraticOperator(MatrixXd::Zero(1, 1), VectorXd::Ones(1), 0.0)};
  const Problem p(MatrixXd::Identity(1, 1), vec1(0.0), f, {}, {});
  SolverConfig cfg;
  cfg.seed_box.x = {{-3.0, 3.0}};
  const SolveResult result = solve_critical_points(p, cfg);
  REQUIRE(result.points.size() == 1);
  CHECK(result.points[0].x[0] == doctest::Approx(-0.567143290409784).epsilon(1e-10));
  CHECK(result.points[0].classification == Classification::GlobalMinCertified);
  CHECK(verify_gap(result.points[0]) <= 1e-10);
}

TEST_CASE("no critical points on an infeasible equality") {
  CanonicalTerm h{std::make_shared<ShiftedQuadratic>(1.0, 0.0, 1.0), half_x_squared()};
  const Problem p(MatrixXd::Identity(1, 1), VectorXd::Ones(1), std::nullopt, {}, {h});
  const SolveResult result = solve_critical_points(p, SolverConfig{});
  CHECK(result.points.empty());
  CHECK(result.stats.seeds > 0);
  CHECK(result.stats.converged == 0);
}

TEST_CASE("deduplication collapses repeated convergence targets") {
  SolverConfig cfg;
  cfg.grid_density = 31;  // many seeds per basin
  const SolveResult result = solve_critical_points(example1(), cfg);
  CHECK(result.points.size() == 4);
  CHECK(result.stats.deduplicated > 0);
}

TEST_CASE("deterministic ordering by dual value") {
  const SolveResult result = solve_critical_points(example1(), SolverConfig{});
  for (size_t i = 1; i < result.points.size(); ++i) {
    CHECK(result.points[i - 1].dual_value <= result.points[i].dual_value);
  }
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.grid_density = 1;
  CHECK_THROWS_AS(solve_critical_points(example1(), cfg), DimensionError);
  cfg = SolverConfig{};
  cfg.newton_tol = 0.0;
  CHECK_THROWS_AS(solve_critical_points(example1(), cfg), DimensionError);
  cfg = SolverConfig{};
  cfg.seed_box.x = {{2.0, -2.0}};
  CHECK_THROWS_AS(solve_critical_points(example1(), cfg), DimensionError);
}

TEST_CASE("active-set cap") {
  std::vector<CanonicalTerm> gs;
  for (int i = 0; i < kActiveSetCap + 1; ++i) {
    gs.push_back({std::make_shared<ShiftedQuadratic>(1.0, 0.0, -0.5),
                  QuadraticOperator(MatrixXd::Zero(1, 1), VectorXd::Ones(1), 0.0)});
  }
  const Problem p(MatrixXd::Identity(1, 1), vec1(0.0), std::nullopt, gs, {});
  CHECK_THROWS_AS(solve_critical_points(p, SolverConfig{}), ActiveSetExplosion);
}

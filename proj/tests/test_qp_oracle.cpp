#include <random>

#include "doctest.h"
#include "odcbf/qp_oracle.hpp"

using namespace odcbf;

namespace {

QpProblem make_problem(Matrix h, Vector q, Matrix a, Vector lb) {
  QpProblem p;
  p.hessian = std::move(h);
  p.linear = std::move(q);
  p.constraints = std::move(a);
  p.lower_bounds = std::move(lb);
  return p;
}

}  // namespace

TEST_CASE("unconstrained minimum") {
  Vector q(2);
  q << -1.0, -2.0;
  const QpProblem p =
      make_problem(Matrix::Identity(2, 2), q, Matrix::Zero(0, 2), Vector(0));
  const QpSolution sol = solve_small_qp(p);
  CHECK(sol.z(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.z(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sol.active_set.empty());
}

TEST_CASE("single active bound with its multiplier") {
  Matrix a(1, 1);
  a << 1.0;
  Vector lb(1);
  lb << 1.0;
  const QpProblem p =
      make_problem(Matrix::Identity(1, 1), Vector::Zero(1), a, lb);
  const QpSolution sol = solve_small_qp(p);
  CHECK(sol.z(0) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(sol.active_set.size() == 1);
  CHECK(sol.active_set[0] == 0);
  CHECK(sol.multipliers(0) == doctest::Approx(1.0).epsilon(1e-12));

  const KktResiduals res = kkt_residuals(p, sol);
  CHECK(res.stationarity < 1e-9);
  CHECK(res.primal < 1e-9);
  CHECK(res.complementarity < 1e-9);
  CHECK(res.dual <= 0.0);
}

TEST_CASE("inactive constraints do not perturb the solution") {
  Matrix a(2, 2);
  a << 1.0, 0.0, 0.0, 1.0;
  Vector lb(2);
  lb << -5.0, -5.0;
  Vector q(2);
  q << -1.0, 1.0;
  const QpProblem p = make_problem(Matrix::Identity(2, 2), q, a, lb);
  const QpSolution sol = solve_small_qp(p);
  CHECK(sol.z(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.z(1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sol.active_set.empty());
  CHECK(sol.multipliers.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("certified infeasibility: zero row demanding a positive bound") {
  Matrix a(1, 1);
  a << 0.0;
  Vector lb(1);
  lb << 1.0;
  const QpProblem p =
      make_problem(Matrix::Identity(1, 1), Vector::Zero(1), a, lb);
  CHECK_THROWS_AS(solve_small_qp(p), InfeasibleError);
}

TEST_CASE("certified infeasibility: anti-parallel rows") {
  Matrix a(2, 1);
  a << 1.0, -1.0;  // z >= 1 and z <= 0
  Vector lb(2);
  lb << 1.0, 0.0;
  const QpProblem p =
      make_problem(Matrix::Identity(1, 1), Vector::Zero(1), a, lb);
  CHECK_THROWS_AS(solve_small_qp(p), InfeasibleError);
}

TEST_CASE("uncertified empty feasible set raises a numerical failure") {
  // Triangle emptied by three pairwise-compatible half planes.
  Matrix a(3, 2);
  a << 1.0, 0.0, 0.0, 1.0, -1.0, -1.0;
  Vector lb(3);
  lb << 1.0, 1.0, -1.0;  // z1 >= 1, z2 >= 1, z1 + z2 <= 1
  const QpProblem p =
      make_problem(Matrix::Identity(2, 2), Vector::Zero(2), a, lb);
  CHECK_THROWS_AS(solve_small_qp(p), NumericalFailure);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(solve_small_qp(make_problem(Matrix::Identity(2, 2),
                                              Vector::Zero(1), Matrix::Zero(0, 2),
                                              Vector(0))),
                  DimensionError);
  Matrix indef(1, 1);
  indef << -1.0;
  CHECK_THROWS_AS(solve_small_qp(make_problem(indef, Vector::Zero(1),
                                              Matrix::Zero(0, 1), Vector(0))),
                  NotPositiveDefinite);
  const Matrix many = Matrix::Identity(17, 1);
  CHECK_THROWS_AS(solve_small_qp(make_problem(Matrix::Identity(1, 1),
                                              Vector::Zero(1), many,
                                              Vector::Zero(17))),
                  DomainError);
}

TEST_CASE("row order does not change the minimizer") {
  Matrix a(3, 2);
  a << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  Vector lb(3);
  lb << 0.0, 0.0, 2.0;
  Vector q(2);
  q << -1.0, -1.0;
  const QpSolution s1 =
      solve_small_qp(make_problem(Matrix::Identity(2, 2), q, a, lb));

  Matrix ap(3, 2);
  ap << 1.0, 1.0, 0.0, 1.0, 1.0, 0.0;
  Vector lbp(3);
  lbp << 2.0, 0.0, 0.0;
  const QpSolution s2 =
      solve_small_qp(make_problem(Matrix::Identity(2, 2), q, ap, lbp));

  CHECK((s1.z - s2.z).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("random problems satisfy their optimality conditions") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const int k = static_cast<int>(rng() % 4);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = uni(rng);
    Matrix h = m.transpose() * m + 0.3 * Matrix::Identity(n, n);
    Vector q(n);
    for (int i = 0; i < n; ++i) q(i) = uni(rng);
    Matrix a(k, n);
    Vector lb(k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = uni(rng);
      lb(i) = uni(rng);
    }
    const QpProblem p = make_problem(h, q, a, lb);
    try {
      const QpSolution sol = solve_small_qp(p);
      const KktResiduals res = kkt_residuals(p, sol);
      CHECK(res.stationarity < 1e-8);
      CHECK(res.primal < 1e-8);
      CHECK(res.complementarity < 1e-8);
      CHECK(res.dual <= 1e-12);
      ++solved;
    } catch (const InfeasibleError&) {
    } catch (const NumericalFailure&) {
    }
  }
  CHECK(solved > 150);  // the vast majority of random instances are feasible
}

TEST_CASE("build_cbf_program reproduces a hand-solved instance") {
  ControlAffineSystem sys;
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.drift = [](const Vector&) {
    Vector f(1);
    f << -2.0;
    return f;
  };
  sys.input_matrix = [](const Vector&) {
    return Matrix::Identity(1, 1).eval();
  };
  const ScalarField h = ScalarField::with_gradient(
      [](const Vector& x) { return x(0); },
      [](const Vector&) {
        Vector g(1);
        g << 1.0;
        return g;
      });
  const FilterConfig cfg =
      FilterConfig::zero_nominal(1, 1.0, 1.0, ClassKe::linear(2.0));
  Vector x(1);
  x << 0.0;
  const QpProblem p = build_cbf_program(sys, h, cfg, x);
  CHECK(p.hessian(0, 0) == 1.0);
  CHECK(p.constraints(0, 0) == 1.0);
  CHECK(p.lower_bounds(0) == 2.0);  // -L_f h - alpha(0) = 2
  const QpSolution sol = solve_small_qp(p);
  CHECK(sol.z(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("build_od_program shape and hand-solved instance") {
  ControlAffineSystem sys;
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.drift = [](const Vector&) {
    Vector f(1);
    f << -2.0;
    return f;
  };
  sys.input_matrix = [](const Vector&) {
    return Matrix::Identity(1, 1).eval();
  };
  const ScalarField h = ScalarField::with_gradient(
      [](const Vector& x) { return x(0) + 1.0; },
      [](const Vector&) {
        Vector g(1);
        g << 1.0;
        return g;
      });
  const FilterConfig cfg =
      FilterConfig::zero_nominal(1, 1.0, 0.0, ClassKe::linear(1.0));
  Vector x(1);
  x << 0.0;
  const QpProblem p = build_od_program(sys, h, cfg, x);
  REQUIRE(p.hessian.rows() == 2);
  REQUIRE(p.constraints.rows() == 2);
  CHECK(p.constraints(0, 0) == 1.0);  // L_g h
  CHECK(p.constraints(0, 1) == 1.0);  // alpha(h)
  CHECK(p.constraints(1, 0) == 0.0);
  CHECK(p.constraints(1, 1) == 1.0);
  CHECK(p.lower_bounds(0) == 2.0);  // -L_f h
  CHECK(p.lower_bounds(1) == 0.0);  // theta_d
  const QpSolution sol = solve_small_qp(p);
  CHECK(sol.z(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.z(1) == doctest::Approx(1.0).epsilon(1e-12));
}

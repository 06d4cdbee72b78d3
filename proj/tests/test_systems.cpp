#include <cmath>

#include "doctest.h"
#include "odcbf/systems.hpp"

using namespace odcbf;

TEST_CASE("double integrator dynamics") {
  const ControlAffineSystem sys = double_integrator();
  CHECK(sys.state_dim == 2);
  CHECK(sys.input_dim == 1);
  Vector x(2);
  x << 1.5, 2.0;
  const Vector f = sys.drift(x);
  CHECK(f(0) == 2.0);
  CHECK(f(1) == 0.0);
  const Matrix g = sys.input_matrix(x);
  CHECK(g.rows() == 2);
  CHECK(g.cols() == 1);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 0) == 1.0);
}

TEST_CASE("satellite drift vanishes radially on a circular orbit") {
  const ControlAffineSystem sys = satellite();
  CHECK(sys.state_dim == 4);
  CHECK(sys.input_dim == 2);
  const double mu = 2.346e-9;
  const double r = 0.6649;
  const double thetadot = std::sqrt(mu / (r * r * r));
  Vector x(4);
  x << r, 2.034, 0.0, thetadot;
  const Vector f = sys.drift(x);
  CHECK(f(0) == 0.0);                                   // rdot
  CHECK(f(1) == thetadot);                              // thetadot
  CHECK(std::abs(f(2)) < 1e-18);                        // r thetadot^2 - mu/r^2
  CHECK(f(3) == 0.0);                                   // -2 rdot thetadot / r
}

TEST_CASE("satellite thrust channels") {
  const ControlAffineSystem sys = satellite();
  Vector x(4);
  x << 0.5, 0.0, 0.1, 0.2;
  const Matrix g = sys.input_matrix(x);
  CHECK(g(2, 0) == 1.0);
  CHECK(g(3, 1) == doctest::Approx(1.0 / 0.5).epsilon(1e-15));
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 1) == 0.0);
}

TEST_CASE("satellite rejects nonpositive radius") {
  const ControlAffineSystem sys = satellite();
  Vector x(4);
  x << 0.0, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(sys.drift(x), DomainError);
  CHECK_THROWS_AS(sys.input_matrix(x), DomainError);
}

TEST_CASE("closed_loop_field composes drift and actuation") {
  const ControlAffineSystem sys = double_integrator();
  auto controller = [](const Vector&) {
    Vector u(1);
    u << 3.0;
    return u;
  };
  const auto field = closed_loop_field(sys, controller);
  Vector x(2);
  x << 0.0, 1.0;
  const Vector dx = field(x);
  CHECK(dx(0) == 1.0);
  CHECK(dx(1) == 3.0);
}

TEST_CASE("closed_loop_field rejects a controller of the wrong width") {
  const ControlAffineSystem sys = double_integrator();
  auto controller = [](const Vector&) { return Vector::Zero(2).eval(); };
  const auto field = closed_loop_field(sys, controller);
  Vector x(2);
  x << 0.0, 1.0;
  CHECK_THROWS_AS(field(x), DimensionError);
}

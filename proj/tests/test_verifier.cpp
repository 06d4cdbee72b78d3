#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "odcbf/verifier.hpp"

using namespace odcbf;

namespace {

ScalarField di_psi() {
  return ScalarField::with_gradient(
      [](const Vector& x) { return 1.0 - x(0) * x(0); },
      [](const Vector& x) {
        Vector g(2);
        g << -2.0 * x(0), 0.0;
        return g;
      });
}

HocbfSpec di_hocbf_spec() {
  auto lf_grad = [](const Vector& x) {
    Vector g(2);
    g << -2.0 * x(1), -2.0 * x(0);
    return g;
  };
  return HocbfSpec{di_psi(), ClassKe::linear(2.0), lf_grad};
}

RegionBox di_box() {
  RegionBox box;
  box.lo = Vector(2);
  box.lo << -1.2, -4.0;
  box.hi = Vector(2);
  box.hi << 1.2, 4.0;
  box.samples_per_dim = {49, 41};
  return box;
}

/// Constant drift (1, 0) with vertical actuation and h = -x1: the
/// boundary always moves against the drift, whatever the input does.
ControlAffineSystem constant_drift() {
  ControlAffineSystem sys;
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.drift = [](const Vector&) {
    Vector f(2);
    f << 1.0, 0.0;
    return f;
  };
  sys.input_matrix = [](const Vector&) {
    Matrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  return sys;
}

ScalarField negated_x1() {
  return ScalarField::with_gradient(
      [](const Vector& x) { return -x(0); },
      [](const Vector&) {
        Vector g(2);
        g << -1.0, 0.0;
        return g;
      });
}

}  // namespace

TEST_CASE("grid sampling covers the box row-major with cell extents") {
  RegionBox box;
  box.lo = Vector(1);
  box.lo << 0.0;
  box.hi = Vector(1);
  box.hi << 1.0;
  box.samples_per_dim = {3};
  const BoxSampling s = box_samples(box);
  REQUIRE(s.states.size() == 3);
  CHECK(s.states[0](0) == 0.0);
  CHECK(s.states[1](0) == 0.5);
  CHECK(s.states[2](0) == 1.0);
  CHECK(s.cell(0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("single-sample dimensions collapse to the midpoint") {
  RegionBox box;
  box.lo = Vector(2);
  box.lo << 0.0, -2.0;
  box.hi = Vector(2);
  box.hi << 1.0, 2.0;
  box.samples_per_dim = {1, 3};
  const BoxSampling s = box_samples(box);
  REQUIRE(s.states.size() == 3);
  for (const Vector& x : s.states) CHECK(x(0) == 0.5);
}

TEST_CASE("sobol sampling produces distinct in-box states") {
  RegionBox box;
  box.lo = Vector(2);
  box.lo << -1.0, 0.0;
  box.hi = Vector(2);
  box.hi << 1.0, 2.0;
  box.sobol_samples = 64;
  const BoxSampling s = box_samples(box);
  REQUIRE(s.states.size() == 64);
  std::set<std::pair<double, double>> seen;
  for (const Vector& x : s.states) {
    CHECK(x(0) >= -1.0);
    CHECK(x(0) <= 1.0);
    CHECK(x(1) >= 0.0);
    CHECK(x(1) <= 2.0);
    seen.insert({x(0), x(1)});
  }
  CHECK(seen.size() == 64);
}

TEST_CASE("boundary decay check flags the constant-drift counterexample") {
  const ControlAffineSystem sys = constant_drift();
  const ScalarField h = negated_x1();
  RegionBox box;
  box.lo = Vector(2);
  box.lo << -1.0, -1.0;
  box.hi = Vector(2);
  box.hi << 1.0, 1.0;
  box.samples_per_dim = {81, 3};

  const VerificationReport rep = check_od_cbc(sys, h, box);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.vacuous);
  REQUIRE(!rep.violations.empty());

  // Re-evaluating a reported violation reproduces the flagged inequality.
  const Vector& x = rep.violations.front().state;
  CHECK(std::abs(h.value(x)) < 0.2);
  const LieData d = lie(sys, h, x);
  CHECK(d.lf <= 0.0);
  CHECK(d.lg.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("boundary decay check is vacuous for a barrier without zeros") {
  const ControlAffineSystem sys = constant_drift();
  const ScalarField flat = ScalarField::with_gradient(
      [](const Vector&) { return 1.0; },
      [](const Vector&) { return Vector::Zero(2).eval(); });
  RegionBox box;
  box.lo = Vector(2);
  box.lo << -1.0, -1.0;
  box.hi = Vector(2);
  box.hi << 1.0, 1.0;
  box.samples_per_dim = {21, 3};
  const VerificationReport rep = check_od_cbc(sys, flat, box);
  CHECK(rep.pass);
  CHECK(rep.vacuous);
  CHECK(rep.qualifying == 0);
  CHECK(rep.note.find("no qualifying") != std::string::npos);
}

TEST_CASE("interior decay check rejects every linear rate for the "
          "second-order barrier") {
  const ControlAffineSystem sys = double_integrator();
  const ScalarField h = hocbf_build(sys, di_hocbf_spec());
  for (double slope : {0.5, 2.0, 8.0}) {
    const VerificationReport rep =
        check_cbc(sys, h, ClassKe::linear(slope), di_box());
    CHECK_FALSE(rep.pass);
    CHECK(!rep.violations.empty());
  }
}

TEST_CASE("second-order prerequisite check passes for the position barrier") {
  const ControlAffineSystem sys = double_integrator();
  const VerificationReport rep =
      check_od_hocbf(sys, di_hocbf_spec(), di_box());
  CHECK(rep.pass);
  CHECK_FALSE(rep.vacuous);
  CHECK(rep.qualifying > 0);
}

TEST_CASE("second-order prerequisite check accepts a custom region") {
  const ControlAffineSystem sys = double_integrator();
  auto upper_half = [](const Vector& x) { return x(1) > 0.0; };
  const VerificationReport rep =
      check_od_hocbf(sys, di_hocbf_spec(), di_box(), VerifyTols{}, upper_half);
  CHECK(rep.pass);
}

TEST_CASE("rectified boundary check flags an undersized remainder margin") {
  const ControlAffineSystem sys = constant_drift();
  const RecbfSpec spec{negated_x1(), ClassKe::linear(1.0), 0.1, 0.11,
                       [](const Vector&) { return Vector::Zero(2).eval(); }};
  RegionBox box;
  box.lo = Vector(2);
  box.lo << -1.0, -1.0;
  box.hi = Vector(2);
  box.hi << 1.0, 1.0;
  box.samples_per_dim = {161, 3};
  const VerificationReport rep = check_od_recbc(sys, spec, box);
  CHECK_FALSE(rep.pass);
  REQUIRE(!rep.violations.empty());
  bool near_expected = false;
  for (const SampleViolation& v : rep.violations) {
    near_expected = near_expected || std::abs(v.state(0) + 0.1) < 0.05;
  }
  CHECK(near_expected);
}

TEST_CASE("rectified boundary check passes the double-integrator barrier") {
  const ControlAffineSystem sys = double_integrator();
  const RecbfSpec spec{di_psi(), ClassKe::linear(2.0), 1.0, 0.1,
                       [](const Vector& x) {
                         Vector g(2);
                         g << -2.0 * x(1), -2.0 * x(0);
                         return g;
                       }};
  const VerificationReport rep = check_od_recbc(sys, spec, di_box());
  CHECK(rep.pass);
}

TEST_CASE("regular value check") {
  RegionBox box;
  box.lo = Vector(2);
  box.lo << -1.0, -1.0;
  box.hi = Vector(2);
  box.hi << 1.0, 1.0;
  box.samples_per_dim = {81, 3};

  const ScalarField degenerate = ScalarField::with_gradient(
      [](const Vector& x) { return x(0) * x(0); },
      [](const Vector& x) {
        Vector g(2);
        g << 2.0 * x(0), 0.0;
        return g;
      });
  const VerificationReport bad = check_regular_value(degenerate, box);
  CHECK_FALSE(bad.pass);
  REQUIRE(!bad.violations.empty());
  CHECK(std::abs(bad.violations.front().state(0)) < 1e-12);

  const VerificationReport good = check_regular_value(di_psi(), box);
  CHECK(good.pass);
}

TEST_CASE("tolerance overrides are honored and reported") {
  const ControlAffineSystem sys = constant_drift();
  const ScalarField h = negated_x1();
  RegionBox box;
  box.lo = Vector(2);
  box.lo << -1.0, -1.0;
  box.hi = Vector(2);
  box.hi << 1.0, 1.0;
  box.samples_per_dim = {80, 3};  // even count: no sample lands on x1 = 0

  VerifyTols tols;
  tols.tol_h = 1e-9;  // much narrower than the grid can reach
  const VerificationReport rep = check_od_cbc(sys, h, box, tols);
  CHECK(rep.vacuous);
  CHECK(rep.pass);
  bool reported = false;
  for (const auto& [name, value] : rep.tolerances) {
    reported = reported || (name == "tol_h" && value == 1e-9);
  }
  CHECK(reported);
}

TEST_CASE("every report carries the sampling disclaimer") {
  const VerificationReport rep =
      check_regular_value(di_psi(), di_box());
  CHECK(rep.note.find("not a proof") != std::string::npos);
}

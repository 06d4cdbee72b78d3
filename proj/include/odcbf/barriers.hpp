#pragma once

#include <optional>

#include "odcbf/systems.hpp"

namespace odcbf {

/// Differentiable scalar map of the state with an explicit gradient.
/// `from_value` wires a central-difference gradient; an analytic gradient
/// supplied through `with_gradient` is trusted but should be cross-checked
/// against finite differences by the caller's tests.
struct ScalarField {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;

  static ScalarField from_value(std::function<double(const Vector&)> value);
  static ScalarField with_gradient(std::function<double(const Vector&)> value,
                                   std::function<Vector(const Vector&)> grad);
};

/// Extended class-K function: zero at zero and strictly increasing.
/// `custom` validates both properties on a coarse grid over [-10, 10].
struct ClassKe {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  static ClassKe linear(double slope);
  static ClassKe cubic(double coeff);
  static ClassKe custom(std::function<double(double)> value,
                        std::function<double(double)> derivative);
};

/// Lie derivatives of a field along a plant at one state:
/// lf = grad(h) . f(x),  lg = grad(h) . g(x) (one entry per input channel).
struct LieData {
  double lf = 0.0;
  Vector lg;
};

LieData lie(const ControlAffineSystem& sys, const ScalarField& field,
            const Vector& x);

/// Second-order barrier built from a relative-degree-two constraint psi:
///   h(x) = L_f psi(x) + alpha1(psi(x)).
/// psi must satisfy L_g psi = 0 on the working domain; see
/// relative_degree_two_holds. An analytic gradient of L_f psi may be
/// supplied; otherwise it is finite-differenced.
struct HocbfSpec {
  ScalarField psi;
  ClassKe alpha1;
  std::optional<std::function<Vector(const Vector&)>> lf_psi_gradient;
};

ScalarField hocbf_build(const ControlAffineSystem& sys, const HocbfSpec& spec);

/// Rectifier gamma(s) = ReLU(-c1 s^3). Twice continuously differentiable,
/// zero for s >= 0.
double rect_gamma(double s, double c1);

/// d/ds rect_gamma = -ReLU(-3 c1 s |s|).
double rect_gamma_prime(double s, double c1);

/// Rectified barrier for relative-degree-two constraints:
///   h(x) = psi(x) - rect_gamma(L_f psi(x) + alpha1(psi(x)) - eps, c1).
/// Wherever the rectifier argument is nonnegative, h equals psi exactly.
struct RecbfSpec {
  ScalarField psi;
  ClassKe alpha1;
  double c1 = 1.0;
  double eps = 0.1;
  std::optional<std::function<Vector(const Vector&)>> lf_psi_gradient;
};

ScalarField recbf_build(const ControlAffineSystem& sys, const RecbfSpec& spec);

/// Rectifier argument w(x) = L_f psi(x) + alpha1(psi(x)) - eps.
double recbf_rectifier_arg(const ControlAffineSystem& sys,
                           const RecbfSpec& spec, const Vector& x);

/// Samples |L_g psi| at the given states; true when every sample stays
/// within tol (the relative-degree-two prerequisite).
bool relative_degree_two_holds(const ControlAffineSystem& sys,
                               const ScalarField& psi,
                               const std::vector<Vector>& states,
                               double tol = 1e-10);

/// Largest relative mismatch between the field's gradient and central
/// finite differences of its value over the given states.
double max_gradient_mismatch(const ScalarField& field,
                             const std::vector<Vector>& states);

}  // namespace odcbf

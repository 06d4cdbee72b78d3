#include "odcbf/barriers.hpp"

#include <cmath>

namespace odcbf {

ScalarField ScalarField::from_value(
    std::function<double(const Vector&)> value) {
  ScalarField field;
  field.value = value;
  field.gradient = [value](const Vector& x) {
    return central_gradient(value, x);
  };
  return field;
}

ScalarField ScalarField::with_gradient(
    std::function<double(const Vector&)> value,
    std::function<Vector(const Vector&)> grad) {
  ScalarField field;
  field.value = std::move(value);
  field.gradient = std::move(grad);
  return field;
}

ClassKe ClassKe::linear(double slope) {
  if (!(slope > 0.0)) {
    throw DomainError("ClassKe::linear: slope must be positive");
  }
  ClassKe a;
  a.value = [slope](double s) { return slope * s; };
  a.derivative = [slope](double) { return slope; };
  return a;
}

ClassKe ClassKe::cubic(double coeff) {
  if (!(coeff > 0.0)) {
    throw DomainError("ClassKe::cubic: coefficient must be positive");
  }
  ClassKe a;
  a.value = [coeff](double s) { return coeff * s * s * s; };
  a.derivative = [coeff](double s) { return 3.0 * coeff * s * s; };
  return a;
}

ClassKe ClassKe::custom(std::function<double(double)> value,
                        std::function<double(double)> derivative) {
  if (value(0.0) != 0.0) {
    throw DomainError("ClassKe::custom: value(0) must be exactly 0");
  }
  double prev = value(-10.0);
  for (int i = 1; i <= 40; ++i) {
    const double s = -10.0 + 0.5 * i;
    const double cur = value(s);
    if (!(cur > prev)) {
      throw DomainError("ClassKe::custom: value must be strictly increasing");
    }
    prev = cur;
  }
  ClassKe a;
  a.value = std::move(value);
  a.derivative = std::move(derivative);
  return a;
}

LieData lie(const ControlAffineSystem& sys, const ScalarField& field,
            const Vector& x) {
  if (x.size() != sys.state_dim) {
    throw DimensionError("lie: state dimension mismatch");
  }
  const Vector grad = field.gradient(x);
  if (grad.size() != sys.state_dim) {
    throw DimensionError("lie: gradient dimension mismatch");
  }
  LieData data;
  data.lf = grad.dot(sys.drift(x));
  data.lg = sys.input_matrix(x).transpose() * grad;
  return data;
}

namespace {

// L_f psi as a scalar map, used both for the barrier value and for the
// finite-difference fallback of its gradient.
std::function<double(const Vector&)> lf_psi_map(const ControlAffineSystem& sys,
                                                const ScalarField& psi) {
  return [sys, psi](const Vector& x) { return psi.gradient(x).dot(sys.drift(x)); };
}

std::function<Vector(const Vector&)> lf_psi_gradient_map(
    const ControlAffineSystem& sys, const HocbfSpec& spec) {
  if (spec.lf_psi_gradient) {
    return *spec.lf_psi_gradient;
  }
  auto lf = lf_psi_map(sys, spec.psi);
  return [lf](const Vector& x) { return central_gradient(lf, x); };
}

}  // namespace

ScalarField hocbf_build(const ControlAffineSystem& sys,
                        const HocbfSpec& spec) {
  auto lf = lf_psi_map(sys, spec.psi);
  auto lf_grad = lf_psi_gradient_map(sys, spec);
  const ScalarField psi = spec.psi;
  const ClassKe alpha1 = spec.alpha1;

  ScalarField h;
  h.value = [lf, psi, alpha1](const Vector& x) {
    return lf(x) + alpha1.value(psi.value(x));
  };
  h.gradient = [lf_grad, psi, alpha1](const Vector& x) -> Vector {
    return lf_grad(x) + alpha1.derivative(psi.value(x)) * psi.gradient(x);
  };
  return h;
}

double rect_gamma(double s, double c1) {
  return std::max(0.0, -c1 * s * s * s);
}

double rect_gamma_prime(double s, double c1) {
  return -std::max(0.0, -3.0 * c1 * s * std::abs(s));
}

double recbf_rectifier_arg(const ControlAffineSystem& sys,
                           const RecbfSpec& spec, const Vector& x) {
  const double psi_v = spec.psi.value(x);
  const double lf = spec.psi.gradient(x).dot(sys.drift(x));
  return lf + spec.alpha1.value(psi_v) - spec.eps;
}

ScalarField recbf_build(const ControlAffineSystem& sys,
                        const RecbfSpec& spec) {
  if (!(spec.c1 > 0.0)) {
    throw DomainError("recbf_build: c1 must be positive");
  }
  auto lf = lf_psi_map(sys, spec.psi);
  HocbfSpec grad_spec{spec.psi, spec.alpha1, spec.lf_psi_gradient};
  auto lf_grad = lf_psi_gradient_map(sys, grad_spec);
  const ScalarField psi = spec.psi;
  const ClassKe alpha1 = spec.alpha1;
  const double c1 = spec.c1;
  const double eps = spec.eps;

  ScalarField h;
  h.value = [lf, psi, alpha1, c1, eps](const Vector& x) {
    const double w = lf(x) + alpha1.value(psi.value(x)) - eps;
    return psi.value(x) - rect_gamma(w, c1);
  };
  h.gradient = [lf, lf_grad, psi, alpha1, c1, eps](const Vector& x) -> Vector {
    const double psi_v = psi.value(x);
    const Vector psi_g = psi.gradient(x);
    const double w = lf(x) + alpha1.value(psi_v) - eps;
    const Vector w_grad = lf_grad(x) + alpha1.derivative(psi_v) * psi_g;
    return psi_g - rect_gamma_prime(w, c1) * w_grad;
  };
  return h;
}

bool relative_degree_two_holds(const ControlAffineSystem& sys,
                               const ScalarField& psi,
                               const std::vector<Vector>& states, double tol) {
  for (const Vector& x : states) {
    const LieData data = lie(sys, psi, x);
    if (data.lg.cwiseAbs().maxCoeff() > tol) {
      return false;
    }
  }
  return true;
}

double max_gradient_mismatch(const ScalarField& field,
                             const std::vector<Vector>& states) {
  double worst = 0.0;
  for (const Vector& x : states) {
    const Vector analytic = field.gradient(x);
    const Vector fd = central_gradient(field.value, x);
    const double err = (analytic - fd).norm() / (1.0 + fd.norm());
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace odcbf

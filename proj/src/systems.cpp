#include "odcbf/systems.hpp"

namespace odcbf {

ControlAffineSystem double_integrator() {
  ControlAffineSystem sys;
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.drift = [](const Vector& x) {
    Vector f(2);
    f << x[1], 0.0;
    return f;
  };
  sys.input_matrix = [](const Vector&) {
    Matrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  return sys;
}

ControlAffineSystem satellite(const SatelliteParams& params) {
  if (!(params.mu > 0.0) || !(params.body_radius > 0.0)) {
    throw DomainError("satellite: mu and body_radius must be positive");
  }
  const double mu = params.mu;
  ControlAffineSystem sys;
  sys.state_dim = 4;
  sys.input_dim = 2;
  sys.drift = [mu](const Vector& x) {
    const double r = x[0];
    if (!(r > 0.0)) {
      throw DomainError("satellite drift: radius must be positive");
    }
    const double rdot = x[2];
    const double thetadot = x[3];
    Vector f(4);
    f << rdot, thetadot, r * thetadot * thetadot - mu / (r * r),
        -2.0 * rdot * thetadot / r;
    return f;
  };
  sys.input_matrix = [](const Vector& x) {
    const double r = x[0];
    if (!(r > 0.0)) {
      throw DomainError("satellite input_matrix: radius must be positive");
    }
    Matrix g = Matrix::Zero(4, 2);
    g(2, 0) = 1.0;
    g(3, 1) = 1.0 / r;
    return g;
  };
  return sys;
}

std::function<Vector(const Vector&)> closed_loop_field(
    const ControlAffineSystem& sys,
    std::function<Vector(const Vector&)> controller) {
  return [sys, controller = std::move(controller)](const Vector& x) -> Vector {
    const Vector u = controller(x);
    if (u.size() != sys.input_dim) {
      throw DimensionError("closed_loop_field: controller output dimension");
    }
    return sys.drift(x) + sys.input_matrix(x) * u;
  };
}

}  // namespace odcbf

#pragma once

#include "odcbf/numerics.hpp"

namespace odcbf {

/// Control-affine plant xdot = drift(x) + input_matrix(x) * u.
struct ControlAffineSystem {
  int state_dim = 0;
  int input_dim = 0;
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> input_matrix;
};

/// Planar double integrator: state (x, v), xdot = (v, u).
ControlAffineSystem double_integrator();

/// Gravitational parameter (km^3/s^2) and central body radius (km).
struct SatelliteParams {
  double mu = 2.346e-9;
  double body_radius = 0.3097;
};

/// Planar orbital plant in polar coordinates. State (r, theta, rdot,
/// thetadot); thrust u = (u_r, u_t) enters the radial and transverse
/// accelerations. The drift requests r > 0 and throws DomainError otherwise.
ControlAffineSystem satellite(const SatelliteParams& params = {});

/// x -> drift(x) + input_matrix(x) * controller(x).
std::function<Vector(const Vector&)> closed_loop_field(
    const ControlAffineSystem& sys,
    std::function<Vector(const Vector&)> controller);

}  // namespace odcbf

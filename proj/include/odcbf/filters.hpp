#pragma once

#include "odcbf/barriers.hpp"

namespace odcbf {

/// Vector magnitudes at or below this count as zero in the gain formulas.
inline constexpr double kGainZeroTol = 1e-12;

/// Barrier values within this of zero count as on the boundary.
inline constexpr double kBoundaryTol = 1e-12;

/// The pointwise program admits no feasible input.
struct InfeasibleError : Error {
  using Error::Error;
};

/// Both gain denominators vanish while the numerator is active.
struct DegenerateDenominator : Error {
  using Error::Error;
};

/// Shared data of the pointwise safety programs:
/// input cost Gamma, decay cost p, nominal decay theta_d, barrier decay
/// alpha, and the nominal controller k_d.
struct FilterConfig {
  SpdMatrix gamma;
  double p = 1.0;
  double theta_d = 1.0;
  ClassKe alpha;
  std::function<Vector(const Vector&)> k_d;

  /// Gamma = I_m, k_d = 0 with the given decay parameters.
  static FilterConfig zero_nominal(int input_dim, double p, double theta_d,
                                   ClassKe alpha);
};

/// Intermediate quantities of the closed forms, reported for inspection:
///   a      constraint value at the nominal pair,
///   b_norm Gamma-weighted norm of the scaled constraint direction,
///   c      alpha(h) / p,
///   gain   multiplier applied to the constraint direction,
///   slack  L_f h + L_g h u + theta * alpha(h) at the returned solution.
struct FilterDiagnostics {
  double a = 0.0;
  double b_norm = 0.0;
  double c = 0.0;
  double gain = 0.0;
  double slack = 0.0;
};

struct FilterResult {
  Vector u;
  double theta = 0.0;
  FilterDiagnostics diagnostics;
};

/// Gain of the fixed-decay filter: 0 when b_norm <= tol or a >= 0, else
/// ReLU(-a) / b_norm^2.
double lambda_gain(double a, double b_norm);

/// Input gain of the adaptive-decay filter:
///   0 when b_norm <= tol and c <= 0, else ReLU(-a) / (b_norm^2 + p ReLU(c)^2).
/// Throws DegenerateDenominator when b_norm <= tol, c <= tol and a < 0.
double phi_gain(double a, double b_norm, double c, double p);

/// Decay increment of the adaptive-decay filter:
///   0 when b_norm <= tol and c <= 0, else
///   ReLU(-a) ReLU(c) / (b_norm^2 + p c^2).
/// Throws DegenerateDenominator when b_norm <= tol, c <= tol and a < 0.
double chi_gain(double a, double b_norm, double c, double p);

/// Minimum-deviation filter enforcing
///   L_f h + L_g h u + alpha(h) >= 0
/// in closed form. Reports theta = 1. Throws InfeasibleError when
/// b_norm <= tol and a < 0.
FilterResult cbf_filter(const ControlAffineSystem& sys, const ScalarField& h,
                        const FilterConfig& cfg, const Vector& x);

/// Minimum-deviation filter that also optimizes the decay rate:
///   min |u - k_d|_Gamma^2 + p (theta - theta_d)^2
///   s.t. L_f h + L_g h u + theta alpha(h) >= 0, theta >= theta_d.
/// Solved in closed form; theta >= theta_d always. Throws InfeasibleError
/// when b_norm <= tol, c <= 0 and a < 0.
FilterResult od_cbf_filter(const ControlAffineSystem& sys,
                           const ScalarField& h, const FilterConfig& cfg,
                           const Vector& x);

/// Fixed-decay filter with a state-dependent decay profile theta(x) >= 0:
/// enforces L_f h + L_g h u + theta(x) alpha(h) >= 0.
FilterResult fixed_theta_filter(const ControlAffineSystem& sys,
                                const ScalarField& h, const FilterConfig& cfg,
                                const std::function<double(const Vector&)>& theta,
                                const Vector& x);

/// Smallest decay rate certifying the barrier inequality along a closed-loop
/// field F at x: 0 on the boundary (|h| <= tol) and ReLU(-grad(h).F) / alpha(h)
/// inside. Throws DomainError when h(x) < -tol.
double converse_decay(const std::function<Vector(const Vector&)>& field,
                      const ScalarField& h, const ClassKe& alpha,
                      const Vector& x);

}  // namespace odcbf

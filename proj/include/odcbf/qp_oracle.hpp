#pragma once

#include "odcbf/filters.hpp"

namespace odcbf {

/// min 0.5 z' H z + q' z  subject to  A z >= lb, with H positive definite.
struct QpProblem {
  Matrix hessian;
  Vector linear;
  Matrix constraints;
  Vector lower_bounds;
};

struct QpSolution {
  Vector z;
  Vector multipliers;          // one per constraint row, zero off the active set
  std::vector<int> active_set; // sorted row indices
  double objective = 0.0;
};

/// Exhaustive active-set solver: enumerates all 2^k constraint subsets,
/// solves each equality-constrained KKT system and keeps the best feasible
/// candidate with nonnegative multipliers. Intended as an independent
/// reference for the closed-form filters (k <= 16).
///
/// Throws InfeasibleError when no candidate exists and emptiness is
/// certified (zero rows with positive bounds, or an anti-parallel pair of
/// rows with incompatible bounds); NumericalFailure when no candidate
/// exists but emptiness cannot be certified.
QpSolution solve_small_qp(const QpProblem& problem);

/// Pointwise program of od_cbf_filter at x, decision z = (u, theta):
///   H = blockdiag(Gamma, p), q = -(Gamma k_d, p theta_d),
///   row 1: (L_g h, alpha(h)) z >= -L_f h,  row 2: theta >= theta_d.
QpProblem build_od_program(const ControlAffineSystem& sys,
                           const ScalarField& h, const FilterConfig& cfg,
                           const Vector& x);

/// Pointwise program of cbf_filter at x, decision z = u:
///   H = Gamma, q = -Gamma k_d, single row L_g h u >= -L_f h - alpha(h).
QpProblem build_cbf_program(const ControlAffineSystem& sys,
                            const ScalarField& h, const FilterConfig& cfg,
                            const Vector& x);

/// Worst-case KKT residuals of a solution, used by self-validation tests:
/// stationarity |H z + q - A' mu|_inf, primal max(lb - A z), complementarity
/// max |mu_i (A_i z - lb_i)|, dual max(-mu).
struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double dual = 0.0;
};

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& sol);

}  // namespace odcbf

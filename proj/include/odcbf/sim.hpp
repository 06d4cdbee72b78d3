#pragma once

#include "odcbf/filters.hpp"

namespace odcbf {

enum class IntegratorKind { rk4, rkf45 };

struct SimConfig {
  IntegratorKind integrator = IntegratorKind::rk4;
  double dt = 1e-3;          // fixed step (rk4)
  Rkf45Options adaptive;     // tolerances and budget (rkf45)
  double t_final = 10.0;
  Vector x0;
  int record_stride = 1;
};

struct TrajectoryRow {
  double t = 0.0;
  Vector x;
  Vector u;
  double theta = 0.0;
  double h = 0.0;
  double psi = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  long total_steps = 0;  // integrator steps taken, regardless of stride
};

struct SimMetrics {
  double min_h = 0.0;
  double min_psi = 0.0;
  double max_input_norm = 0.0;
  double final_h = 0.0;
  long wall_steps = 0;
};

/// The pointwise program became infeasible mid-run. Carries the rows
/// recorded before the abort.
struct FilterInfeasible : Error {
  FilterInfeasible(const std::string& what, double time, Vector state,
                   Trajectory partial)
      : Error(what), time(time), state(std::move(state)),
        partial(std::move(partial)) {}
  double time;
  Vector state;
  Trajectory partial;
};

/// Integration failed mid-run (non-finite values, step underflow, domain
/// exit, or step budget). Carries the rows recorded before the abort.
struct IntegrationAborted : NumericalFailure {
  IntegrationAborted(const std::string& what, double time, Vector state,
                     Trajectory partial, std::string cause)
      : NumericalFailure(what, time, std::move(state)),
        partial(std::move(partial)), cause(std::move(cause)) {}
  Trajectory partial;
  std::string cause;
};

using FilterFn = std::function<FilterResult(const Vector&)>;

/// Integrates xdot = f(x) + g(x) u with u drawn from the filter at every
/// integrator stage state (no zero-order hold). Records every
/// record_stride-th step plus the initial and final states. An infeasible
/// filter at x0 surfaces as the filter's own error; mid-run failures abort
/// with the partial trajectory attached.
Trajectory simulate(const ControlAffineSystem& sys, const ScalarField& h_field,
                    const ScalarField& psi_field, const FilterFn& filter,
                    const SimConfig& cfg);

/// Exact extrema over the recorded rows.
SimMetrics metrics(const Trajectory& tr);

}  // namespace odcbf

#include "odcbf/sim.hpp"

#include <cmath>

#include "odcbf/systems.hpp"

namespace odcbf {

namespace {

void validate_config(const ControlAffineSystem& sys, const SimConfig& cfg) {
  if (cfg.x0.size() != sys.state_dim) {
    throw DimensionError("simulate: x0 dimension mismatch");
  }
  if (!(cfg.dt > 0.0) || !(cfg.t_final > 0.0) || cfg.record_stride < 1) {
    throw DomainError("simulate: dt > 0, t_final > 0, record_stride >= 1");
  }
}

TrajectoryRow make_row(double t, const Vector& x, const ScalarField& h_field,
                       const ScalarField& psi_field, const FilterFn& filter) {
  const FilterResult fr = filter(x);
  TrajectoryRow row;
  row.t = t;
  row.x = x;
  row.u = fr.u;
  row.theta = fr.theta;
  row.h = h_field.value(x);
  row.psi = psi_field.value(x);
  if (!row.x.allFinite() || !row.u.allFinite() || !std::isfinite(row.theta) ||
      !std::isfinite(row.h) || !std::isfinite(row.psi)) {
    throw NumericalFailure("simulate: non-finite trajectory row", t, x);
  }
  return row;
}

}  // namespace

Trajectory simulate(const ControlAffineSystem& sys, const ScalarField& h_field,
                    const ScalarField& psi_field, const FilterFn& filter,
                    const SimConfig& cfg) {
  validate_config(sys, cfg);
  const auto field = closed_loop_field(
      sys, [&filter](const Vector& x) { return filter(x).u; });

  Trajectory tr;
  // Row zero is recorded before the guarded loop so that an infeasible
  // filter at x0 surfaces as the filter's own error.
  tr.rows.push_back(make_row(0.0, cfg.x0, h_field, psi_field, filter));

  double t = 0.0;
  Vector x = cfg.x0;
  try {
    if (cfg.integrator == IntegratorKind::rk4) {
      const long n_steps =
          std::max<long>(1, std::llround(cfg.t_final / cfg.dt));
      const double dt = cfg.t_final / static_cast<double>(n_steps);
      for (long i = 1; i <= n_steps; ++i) {
        x = rk4_step(field, x, dt);
        t = static_cast<double>(i) * dt;
        ++tr.total_steps;
        if (i % cfg.record_stride == 0 || i == n_steps) {
          tr.rows.push_back(make_row(t, x, h_field, psi_field, filter));
        }
      }
    } else {
      const double span = cfg.t_final;
      const double dt_floor = 1e-14 * span;
      double dt = span / 100.0;
      long accepted = 0;
      long attempts = 0;
      while (t < cfg.t_final) {
        dt = std::min(dt, cfg.t_final - t);
        if (dt < dt_floor) {
          throw StiffnessFailure("simulate: step size underflow", t, x);
        }
        // A trial stage that leaves the vector field's domain or produces
        // non-finite values is treated like any over-large step: reject and
        // shrink. Persistent failure drains the attempt budget or hits the
        // step floor, so the abort diagnosis lands at the last good state.
        Rkf45Trial trial;
        bool stage_failed = false;
        try {
          trial = rkf45_trial_step(field, x, dt, cfg.adaptive.rel_tol,
                                   cfg.adaptive.abs_tol);
        } catch (const DomainError&) {
          stage_failed = true;
        } catch (const NumericalFailure&) {
          stage_failed = true;
        }
        if (stage_failed) {
          dt *= 0.2;
          if (++attempts > cfg.adaptive.max_steps) {
            throw NumericalFailure("simulate: step budget exhausted", t, x);
          }
          continue;
        }
        if (trial.error_ratio <= 1.0) {
          t += dt;
          x = trial.x5;
          ++accepted;
          ++tr.total_steps;
          if (accepted % cfg.record_stride == 0 || t >= cfg.t_final) {
            tr.rows.push_back(make_row(t, x, h_field, psi_field, filter));
          }
        }
        dt *= rkf45_step_scale(trial.error_ratio);
        if (++attempts > cfg.adaptive.max_steps) {
          throw NumericalFailure("simulate: step budget exhausted", t, x);
        }
      }
    }
  } catch (const InfeasibleError& e) {
    throw FilterInfeasible(std::string("simulate: filter infeasible: ") +
                               e.what(),
                           t, x, std::move(tr));
  } catch (const DegenerateDenominator& e) {
    throw FilterInfeasible(std::string("simulate: filter degenerate: ") +
                               e.what(),
                           t, x, std::move(tr));
  } catch (const StiffnessFailure& e) {
    throw IntegrationAborted(e.what(), t, x, std::move(tr), "stiffness");
  } catch (const NumericalFailure& e) {
    throw IntegrationAborted(e.what(), t, x, std::move(tr), "numerical");
  } catch (const DomainError& e) {
    throw IntegrationAborted(e.what(), t, x, std::move(tr), "domain");
  }

  return tr;
}

SimMetrics metrics(const Trajectory& tr) {
  if (tr.rows.empty()) {
    throw DimensionError("metrics: empty trajectory");
  }
  SimMetrics m;
  m.min_h = tr.rows.front().h;
  m.min_psi = tr.rows.front().psi;
  // stableNorm: diverging runs legitimately record inputs near the
  // double-precision ceiling, where squaredNorm would overflow.
  m.max_input_norm = tr.rows.front().u.stableNorm();
  for (const TrajectoryRow& row : tr.rows) {
    m.min_h = std::min(m.min_h, row.h);
    m.min_psi = std::min(m.min_psi, row.psi);
    m.max_input_norm = std::max(m.max_input_norm, row.u.stableNorm());
  }
  m.final_h = tr.rows.back().h;
  m.wall_steps = tr.total_steps;
  return m;
}

}  // namespace odcbf

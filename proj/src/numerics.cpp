#include "odcbf/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace odcbf {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

SpdMatrix::SpdMatrix(Matrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() == 0) {
    throw DimensionError("SpdMatrix: matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, mat_.cwiseAbs().maxCoeff());
  const double asym = (mat_ - mat_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw NotPositiveDefinite("SpdMatrix: matrix is not symmetric");
  }
  llt_.compute(mat_);
  if (llt_.info() != Eigen::Success) {
    throw NotPositiveDefinite("SpdMatrix: Cholesky factorization failed");
  }
}

SpdMatrix SpdMatrix::identity(int dim) {
  return SpdMatrix(Matrix::Identity(dim, dim));
}

SpdMatrix SpdMatrix::diagonal(const std::vector<double>& entries) {
  if (entries.empty()) {
    throw DimensionError("SpdMatrix::diagonal: empty diagonal");
  }
  Matrix m = Matrix::Zero(static_cast<int>(entries.size()),
                          static_cast<int>(entries.size()));
  for (size_t i = 0; i < entries.size(); ++i) {
    m(static_cast<int>(i), static_cast<int>(i)) = entries[i];
  }
  return SpdMatrix(std::move(m));
}

Vector SpdMatrix::solve(const Vector& rhs) const {
  if (rhs.size() != mat_.rows()) {
    throw DimensionError("SpdMatrix::solve: rhs dimension mismatch");
  }
  return llt_.solve(rhs);
}

double weighted_norm(const Vector& v, const SpdMatrix& g) {
  if (v.size() != g.dim()) {
    throw DimensionError("weighted_norm: dimension mismatch");
  }
  const double q = v.dot(g.mat() * v);
  return std::sqrt(std::max(0.0, q));
}

Vector solve_spd(const SpdMatrix& g, const Vector& rhs) { return g.solve(rhs); }

Vector central_gradient(const std::function<double(const Vector&)>& field,
                        const Vector& x) {
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double delta = 1e-6 * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + delta;
    const double fp = field(probe);
    probe[i] = x[i] - delta;
    const double fm = field(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalFailure("central_gradient: field is not finite near x",
                             0.0, x);
    }
    grad[i] = (fp - fm) / (2.0 * delta);
  }
  return grad;
}

Vector rk4_step(const std::function<Vector(const Vector&)>& deriv,
                const Vector& x, double dt) {
  const Vector k1 = deriv(x);
  const Vector k2 = deriv(x + (0.5 * dt) * k1);
  const Vector k3 = deriv(x + (0.5 * dt) * k2);
  const Vector k4 = deriv(x + dt * k3);
  Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(next)) {
    throw NumericalFailure("rk4_step: non-finite state produced", 0.0, x);
  }
  return next;
}

Rkf45Trial rkf45_trial_step(const std::function<Vector(const Vector&)>& deriv,
                            const Vector& x, double dt, double rel_tol,
                            double abs_tol) {
  const Vector k1 = deriv(x);
  const Vector k2 = deriv(x + dt * (1.0 / 4.0) * k1);
  const Vector k3 = deriv(x + dt * ((3.0 / 32.0) * k1 + (9.0 / 32.0) * k2));
  const Vector k4 =
      deriv(x + dt * ((1932.0 / 2197.0) * k1 - (7200.0 / 2197.0) * k2 +
                      (7296.0 / 2197.0) * k3));
  const Vector k5 =
      deriv(x + dt * ((439.0 / 216.0) * k1 - 8.0 * k2 + (3680.0 / 513.0) * k3 -
                      (845.0 / 4104.0) * k4));
  const Vector k6 =
      deriv(x + dt * (-(8.0 / 27.0) * k1 + 2.0 * k2 - (3544.0 / 2565.0) * k3 +
                      (1859.0 / 4104.0) * k4 - (11.0 / 40.0) * k5));

  Rkf45Trial trial;
  trial.x4 = x + dt * ((25.0 / 216.0) * k1 + (1408.0 / 2565.0) * k3 +
                       (2197.0 / 4104.0) * k4 - (1.0 / 5.0) * k5);
  trial.x5 = x + dt * ((16.0 / 135.0) * k1 + (6656.0 / 12825.0) * k3 +
                       (28561.0 / 56430.0) * k4 - (9.0 / 50.0) * k5 +
                       (2.0 / 55.0) * k6);
  if (!all_finite(trial.x4) || !all_finite(trial.x5)) {
    throw NumericalFailure("rkf45: non-finite state produced", 0.0, x);
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double scale =
        abs_tol +
        rel_tol * std::max(std::abs(x[i]), std::abs(trial.x5[i]));
    worst = std::max(worst, std::abs(trial.x5[i] - trial.x4[i]) / scale);
  }
  trial.error_ratio = worst;
  return trial;
}

double rkf45_step_scale(double error_ratio) {
  if (error_ratio <= 0.0) {
    return 5.0;
  }
  const double scale = 0.9 * std::pow(error_ratio, -0.2);
  return std::clamp(scale, 0.2, 5.0);
}

std::vector<std::pair<double, Vector>> rkf45_integrate(
    const std::function<Vector(const Vector&)>& deriv, const Vector& x0,
    double t0, double t1, const Rkf45Options& opts) {
  if (!(t1 > t0)) {
    throw DomainError("rkf45_integrate: t1 must exceed t0");
  }
  const double span = t1 - t0;
  const double dt_floor = 1e-14 * span;

  std::vector<std::pair<double, Vector>> out;
  out.emplace_back(t0, x0);

  double t = t0;
  Vector x = x0;
  double dt = span / 100.0;
  long steps = 0;
  while (t < t1) {
    dt = std::min(dt, t1 - t);
    if (dt < dt_floor) {
      throw StiffnessFailure("rkf45_integrate: step size underflow", t, x);
    }
    const Rkf45Trial trial =
        rkf45_trial_step(deriv, x, dt, opts.rel_tol, opts.abs_tol);
    if (trial.error_ratio <= 1.0) {
      t += dt;
      x = trial.x5;
      out.emplace_back(t, x);
    }
    dt *= rkf45_step_scale(trial.error_ratio);
    if (++steps > opts.max_steps) {
      throw NumericalFailure("rkf45_integrate: step budget exhausted", t, x);
    }
  }
  return out;
}

}  // namespace odcbf

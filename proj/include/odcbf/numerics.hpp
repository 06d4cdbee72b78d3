#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace odcbf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument dimensions do not match the operation's contract.
struct DimensionError : Error {
  using Error::Error;
};

/// A matrix required to be symmetric positive definite is not.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

/// An evaluation produced a non-finite value. When raised inside an
/// integrator the offending time and state are attached.
struct NumericalFailure : Error {
  explicit NumericalFailure(const std::string& what, double time = 0.0,
                            Vector state = {})
      : Error(what), time(time), state(std::move(state)) {}
  double time;
  Vector state;
};

/// The adaptive step size collapsed below the resolvable floor.
struct StiffnessFailure : NumericalFailure {
  using NumericalFailure::NumericalFailure;
};

/// Evaluation requested outside the declared domain of a map.
struct DomainError : Error {
  using Error::Error;
};

/// Symmetric positive definite matrix with a cached Cholesky factorization.
///
/// Construction rejects matrices that are not symmetric to 1e-12 relative
/// or whose Cholesky factorization fails (some eigenvalue <= 0).
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);

  static SpdMatrix identity(int dim);
  static SpdMatrix diagonal(const std::vector<double>& entries);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& mat() const { return mat_; }

  /// Solves (*this) z = rhs through the cached factorization.
  Vector solve(const Vector& rhs) const;

 private:
  Matrix mat_;
  Eigen::LLT<Matrix> llt_;
};

/// sqrt(v' G v). Zero exactly when v = 0; tiny negative rounding is clamped.
double weighted_norm(const Vector& v, const SpdMatrix& g);

/// Solves G z = rhs. Residual stays within 1e-10 * (1 + |rhs|) for
/// well-conditioned G.
Vector solve_spd(const SpdMatrix& g, const Vector& rhs);

/// Central finite differences with per-component step 1e-6 * (1 + |x_i|).
/// Throws NumericalFailure when the field evaluates to a non-finite value.
Vector central_gradient(const std::function<double(const Vector&)>& field,
                        const Vector& x);

/// One classical fourth-order Runge-Kutta step of size dt.
Vector rk4_step(const std::function<Vector(const Vector&)>& deriv,
                const Vector& x, double dt);

struct Rkf45Options {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  long max_steps = 500000;
};

/// One embedded Fehlberg 4(5) trial step. The caller accepts the step when
/// error_ratio <= 1.
struct Rkf45Trial {
  Vector x4;
  Vector x5;
  double error_ratio = 0.0;
};

Rkf45Trial rkf45_trial_step(const std::function<Vector(const Vector&)>& deriv,
                            const Vector& x, double dt, double rel_tol,
                            double abs_tol);

/// Step-size update factor after a trial with the given error ratio.
double rkf45_step_scale(double error_ratio);

/// Adaptive Runge-Kutta-Fehlberg 4(5) over [t0, t1]. Returns every accepted
/// state including the initial one. Throws StiffnessFailure when the step
/// size underflows below 1e-14 * (t1 - t0) or the step budget is exhausted
/// without reaching t1.
std::vector<std::pair<double, Vector>> rkf45_integrate(
    const std::function<Vector(const Vector&)>& deriv, const Vector& x0,
    double t0, double t1, const Rkf45Options& opts = {});

}  // namespace odcbf

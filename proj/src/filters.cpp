#include "odcbf/filters.hpp"

#include <cmath>

namespace odcbf {

namespace {

double relu(double v) { return v > 0.0 ? v : 0.0; }

struct ConstraintData {
  double a = 0.0;
  Vector b;        // Gamma^{-1} lg
  double b_norm = 0.0;  // |b| weighted by Gamma = sqrt(lg . b)
  double c = 0.0;
  double lf = 0.0;
  Vector lg;
  double alpha_h = 0.0;
  Vector kd;
};

// a is assembled with the supplied decay weight on alpha(h): 1 for the
// fixed filter, theta_d for the adaptive one, theta(x) for profiles.
ConstraintData constraint_data(const ControlAffineSystem& sys,
                               const ScalarField& h, const FilterConfig& cfg,
                               const Vector& x, double decay_weight) {
  if (cfg.gamma.dim() != sys.input_dim) {
    throw DimensionError("filter: Gamma dimension must match input_dim");
  }
  ConstraintData data;
  const LieData ld = lie(sys, h, x);
  data.lf = ld.lf;
  data.lg = ld.lg;
  data.kd = cfg.k_d ? cfg.k_d(x) : Vector(Vector::Zero(sys.input_dim));
  if (data.kd.size() != sys.input_dim) {
    throw DimensionError("filter: nominal controller output dimension");
  }
  data.alpha_h = cfg.alpha.value(h.value(x));
  data.a = data.lf + data.lg.dot(data.kd) + decay_weight * data.alpha_h;
  data.b = cfg.gamma.solve(data.lg);
  data.b_norm = std::sqrt(std::max(0.0, data.lg.dot(data.b)));
  data.c = data.alpha_h / cfg.p;
  return data;
}

FilterResult assemble(const ConstraintData& data, double gain, double theta) {
  FilterResult result;
  result.u = data.kd + gain * data.b;
  result.theta = theta;
  result.diagnostics.a = data.a;
  result.diagnostics.b_norm = data.b_norm;
  result.diagnostics.c = data.c;
  result.diagnostics.gain = gain;
  result.diagnostics.slack =
      data.lf + data.lg.dot(result.u) + theta * data.alpha_h;
  return result;
}

void check_p(double p) {
  if (!(p > 0.0)) {
    throw DomainError("filter: p must be positive");
  }
}

}  // namespace

FilterConfig FilterConfig::zero_nominal(int input_dim, double p,
                                        double theta_d, ClassKe alpha) {
  FilterConfig cfg{SpdMatrix::identity(input_dim), p, theta_d,
                   std::move(alpha), nullptr};
  cfg.k_d = [input_dim](const Vector&) {
    return Vector(Vector::Zero(input_dim));
  };
  return cfg;
}

double lambda_gain(double a, double b_norm) {
  if (b_norm <= kGainZeroTol || a >= 0.0) {
    return 0.0;
  }
  return relu(-a) / (b_norm * b_norm);
}

double phi_gain(double a, double b_norm, double c, double p) {
  check_p(p);
  if (b_norm <= kGainZeroTol && c <= kGainZeroTol && a < 0.0) {
    throw DegenerateDenominator("phi_gain: both denominators vanish");
  }
  if (b_norm <= kGainZeroTol && c <= 0.0) {
    return 0.0;
  }
  const double rc = relu(c);
  return relu(-a) / (b_norm * b_norm + p * rc * rc);
}

double chi_gain(double a, double b_norm, double c, double p) {
  check_p(p);
  if (b_norm <= kGainZeroTol && c <= kGainZeroTol && a < 0.0) {
    throw DegenerateDenominator("chi_gain: both denominators vanish");
  }
  if (b_norm <= kGainZeroTol && c <= 0.0) {
    return 0.0;
  }
  return relu(-a) * relu(c) / (b_norm * b_norm + p * c * c);
}

FilterResult cbf_filter(const ControlAffineSystem& sys, const ScalarField& h,
                        const FilterConfig& cfg, const Vector& x) {
  check_p(cfg.p);
  const ConstraintData data = constraint_data(sys, h, cfg, x, 1.0);
  if (data.b_norm <= kGainZeroTol && data.a < 0.0) {
    throw InfeasibleError("cbf_filter: constraint direction vanished with a < 0");
  }
  const double gain = lambda_gain(data.a, data.b_norm);
  return assemble(data, gain, 1.0);
}

FilterResult od_cbf_filter(const ControlAffineSystem& sys,
                           const ScalarField& h, const FilterConfig& cfg,
                           const Vector& x) {
  check_p(cfg.p);
  if (cfg.theta_d < 0.0) {
    throw DomainError("od_cbf_filter: theta_d must be nonnegative");
  }
  const ConstraintData data = constraint_data(sys, h, cfg, x, cfg.theta_d);
  if (data.b_norm <= kGainZeroTol && data.c <= 0.0 && data.a < 0.0) {
    throw InfeasibleError(
        "od_cbf_filter: constraint direction vanished outside the safe set "
        "with a < 0");
  }
  const double gain = phi_gain(data.a, data.b_norm, data.c, cfg.p);
  const double theta =
      cfg.theta_d + chi_gain(data.a, data.b_norm, data.c, cfg.p);
  return assemble(data, gain, theta);
}

FilterResult fixed_theta_filter(
    const ControlAffineSystem& sys, const ScalarField& h,
    const FilterConfig& cfg, const std::function<double(const Vector&)>& theta,
    const Vector& x) {
  check_p(cfg.p);
  const double theta_x = theta(x);
  if (!(theta_x >= 0.0)) {
    throw DomainError("fixed_theta_filter: theta(x) must be nonnegative");
  }
  const ConstraintData data = constraint_data(sys, h, cfg, x, theta_x);
  if (data.b_norm <= kGainZeroTol && data.a < 0.0) {
    throw InfeasibleError(
        "fixed_theta_filter: constraint direction vanished with a < 0");
  }
  const double gain = lambda_gain(data.a, data.b_norm);
  return assemble(data, gain, theta_x);
}

double converse_decay(const std::function<Vector(const Vector&)>& field,
                      const ScalarField& h, const ClassKe& alpha,
                      const Vector& x) {
  const double hv = h.value(x);
  if (hv < -kBoundaryTol) {
    throw DomainError("converse_decay: state lies outside the safe set");
  }
  if (std::abs(hv) <= kBoundaryTol) {
    return 0.0;
  }
  const double hdot = h.gradient(x).dot(field(x));
  return relu(-hdot) / alpha.value(hv);
}

}  // namespace odcbf

#pragma once

#include <optional>
#include <string>

#include "odcbf/barriers.hpp"

namespace odcbf {

/// Axis-aligned sampling region. Grid sampling uses samples_per_dim
/// (default when sobol_samples == 0); setting sobol_samples > 0 switches to
/// a Sobol low-discrepancy sweep with that many points.
struct RegionBox {
  Vector lo;
  Vector hi;
  std::vector<int> samples_per_dim;
  long sobol_samples = 0;
};

/// Sample states plus the per-dimension cell extent of the sweep, used to
/// derive boundary-band tolerances.
struct BoxSampling {
  std::vector<Vector> states;
  Vector cell;
};

BoxSampling box_samples(const RegionBox& box);

struct SampleViolation {
  Vector state;
  std::vector<std::pair<std::string, double>> quantities;
};

struct VerificationReport {
  std::string condition;
  long samples = 0;
  long qualifying = 0;
  std::vector<SampleViolation> violations;
  std::vector<std::pair<std::string, double>> tolerances;
  bool pass = false;
  bool vacuous = false;
  std::string note;
};

/// Optional overrides for the sampling tolerances. Unset tol_h derives from
/// the box: 0.5 * sum_i max|dh/dx_i| * cell_i, so refining the sweep keeps a
/// true zero crossing inside the band. Unset tol_g derives as
/// 1e-6 * (1 + max |L_g h| over the box). margin applies only to the
/// boundary decay check.
struct VerifyTols {
  std::optional<double> tol_h;
  std::optional<double> tol_g;
  double margin = 0.0;
};

/// Boundary decay check: flags samples with |h| <= tol_h and |L_g h| <= tol_g
/// whose L_f h <= margin. An empty qualifying set passes with a vacuous note.
VerificationReport check_od_cbc(const ControlAffineSystem& sys,
                                const ScalarField& h, const RegionBox& box,
                                const VerifyTols& tols = {});

/// Interior decay check: over samples with |L_g h| <= tol_g and h >= 0,
/// flags L_f h <= -alpha(h).
VerificationReport check_cbc(const ControlAffineSystem& sys,
                             const ScalarField& h, const ClassKe& alpha,
                             const RegionBox& box, const VerifyTols& tols = {});

/// Second-order prerequisite check: over samples in the region (default
/// psi >= 0 and h >= 0) with |h| <= tol_h, flags |L_g L_f psi| <= tol_g.
VerificationReport check_od_hocbf(
    const ControlAffineSystem& sys, const HocbfSpec& spec, const RegionBox& box,
    const VerifyTols& tols = {},
    const std::function<bool(const Vector&)>& region = nullptr);

/// Rectified-barrier relaxed check: over samples with h >= 0, |h| <= tol_h
/// and |L_g L_f psi| <= tol_g, flags L_f psi < -alpha1(psi) + eps.
VerificationReport check_od_recbc(const ControlAffineSystem& sys,
                                  const RecbfSpec& spec, const RegionBox& box,
                                  const VerifyTols& tols = {});

/// Regular-value check: flags samples with |h| <= tol_h and |grad h| <= 1e-8.
VerificationReport check_regular_value(const ScalarField& h,
                                       const RegionBox& box,
                                       const VerifyTols& tols = {});

}  // namespace odcbf

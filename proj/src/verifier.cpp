#include "odcbf/verifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace odcbf {

namespace {

constexpr const char* kDisclaimer = "sampling-based, not a proof";
constexpr size_t kMaxStoredViolations = 100000;

void validate_box(const RegionBox& box) {
  if (box.lo.size() != box.hi.size() || box.lo.size() == 0) {
    throw DimensionError("RegionBox: bounds dimension mismatch");
  }
  for (Eigen::Index i = 0; i < box.lo.size(); ++i) {
    if (!(box.lo[i] < box.hi[i])) {
      throw DomainError("RegionBox: lower bound must be below upper bound");
    }
  }
  if (box.sobol_samples == 0) {
    if (box.samples_per_dim.size() != static_cast<size_t>(box.lo.size())) {
      throw DimensionError("RegionBox: samples_per_dim dimension mismatch");
    }
    for (int n : box.samples_per_dim) {
      if (n < 1) {
        throw DomainError("RegionBox: samples_per_dim entries must be >= 1");
      }
    }
  }
}

// Direction numbers from the standard Joe-Kuo table, dimensions 2..8.
// Dimension 1 is the base-2 van der Corput sequence.
struct SobolDim {
  int degree;
  unsigned poly;
  unsigned m[5];
};

constexpr SobolDim kSobolDims[] = {
    {1, 0, {1, 0, 0, 0, 0}},  {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},  {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},  {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
};

std::vector<Vector> sobol_points(int dim, long count) {
  if (dim > 8) {
    throw DomainError("sobol sampling supports at most 8 dimensions");
  }
  constexpr int kBits = 32;
  std::vector<std::array<uint32_t, kBits + 1>> v(static_cast<size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    auto& vd = v[static_cast<size_t>(d)];
    if (d == 0) {
      for (int j = 1; j <= kBits; ++j) {
        vd[static_cast<size_t>(j)] = 1u << (kBits - j);
      }
      continue;
    }
    const SobolDim& sd = kSobolDims[d - 1];
    const int s = sd.degree;
    for (int j = 1; j <= s; ++j) {
      vd[static_cast<size_t>(j)] = sd.m[j - 1] << (kBits - j);
    }
    for (int j = s + 1; j <= kBits; ++j) {
      vd[static_cast<size_t>(j)] =
          vd[static_cast<size_t>(j - s)] ^ (vd[static_cast<size_t>(j - s)] >> s);
      for (int k = 1; k < s; ++k) {
        if ((sd.poly >> (s - 1 - k)) & 1u) {
          vd[static_cast<size_t>(j)] ^= vd[static_cast<size_t>(j - k)];
        }
      }
    }
  }

  std::vector<Vector> points;
  points.reserve(static_cast<size_t>(count));
  std::vector<uint32_t> state(static_cast<size_t>(dim), 0u);
  for (long i = 0; i < count; ++i) {
    Vector p(dim);
    for (int d = 0; d < dim; ++d) {
      p[d] = static_cast<double>(state[static_cast<size_t>(d)]) /
             4294967296.0;
    }
    points.push_back(std::move(p));
    unsigned long idx = static_cast<unsigned long>(i) + 1;
    int rightmost_zero = 1;
    while (idx & 1ul) {
      idx >>= 1;
      ++rightmost_zero;
    }
    for (int d = 0; d < dim; ++d) {
      state[static_cast<size_t>(d)] ^=
          v[static_cast<size_t>(d)][static_cast<size_t>(rightmost_zero)];
    }
  }
  return points;
}

}  // namespace

BoxSampling box_samples(const RegionBox& box) {
  validate_box(box);
  const int dim = static_cast<int>(box.lo.size());
  BoxSampling out;
  out.cell = Vector(dim);

  if (box.sobol_samples > 0) {
    const double per_dim =
        std::pow(static_cast<double>(box.sobol_samples), 1.0 / dim);
    for (int i = 0; i < dim; ++i) {
      out.cell[i] = (box.hi[i] - box.lo[i]) / std::max(1.0, per_dim);
    }
    for (const Vector& unit : sobol_points(dim, box.sobol_samples)) {
      Vector x(dim);
      for (int i = 0; i < dim; ++i) {
        x[i] = box.lo[i] + unit[i] * (box.hi[i] - box.lo[i]);
      }
      out.states.push_back(std::move(x));
    }
    return out;
  }

  long total = 1;
  for (int n : box.samples_per_dim) {
    total *= n;
    if (total > 50000000) {
      throw DomainError("RegionBox: grid too large");
    }
  }
  for (int i = 0; i < dim; ++i) {
    const int n = box.samples_per_dim[static_cast<size_t>(i)];
    out.cell[i] =
        n > 1 ? (box.hi[i] - box.lo[i]) / (n - 1) : (box.hi[i] - box.lo[i]);
  }
  out.states.reserve(static_cast<size_t>(total));
  std::vector<int> idx(static_cast<size_t>(dim), 0);
  for (long s = 0; s < total; ++s) {
    Vector x(dim);
    for (int i = 0; i < dim; ++i) {
      const int n = box.samples_per_dim[static_cast<size_t>(i)];
      x[i] = n > 1 ? box.lo[i] + idx[static_cast<size_t>(i)] * out.cell[i]
                   : 0.5 * (box.lo[i] + box.hi[i]);
    }
    out.states.push_back(std::move(x));
    for (int i = dim - 1; i >= 0; --i) {
      if (++idx[static_cast<size_t>(i)] <
          box.samples_per_dim[static_cast<size_t>(i)]) {
        break;
      }
      idx[static_cast<size_t>(i)] = 0;
    }
  }
  return out;
}

namespace {

struct SweepStats {
  double max_lg = 0.0;        // max |L_g h| over the box
  Vector max_abs_grad;        // per-dimension max |dh/dx_i|
};

SweepStats sweep_stats(const ControlAffineSystem* sys, const ScalarField& h,
                       const BoxSampling& sampling) {
  SweepStats stats;
  stats.max_abs_grad = Vector::Zero(sampling.cell.size());
  for (const Vector& x : sampling.states) {
    const Vector grad = h.gradient(x);
    stats.max_abs_grad = stats.max_abs_grad.cwiseMax(grad.cwiseAbs());
    if (sys != nullptr) {
      const Vector lg = sys->input_matrix(x).transpose() * grad;
      stats.max_lg = std::max(stats.max_lg, lg.norm());
    }
  }
  return stats;
}

// Half the largest change h can see across one sampling cell. Dimensions the
// field ignores contribute nothing, so the band stays meaningful when the box
// has inert coordinates.
double default_band(const SweepStats& stats, const BoxSampling& sampling) {
  const double band = 0.5 * stats.max_abs_grad.dot(sampling.cell);
  return std::max(band, 1e-12);
}

double default_gate(const SweepStats& stats) {
  return 1e-6 * (1.0 + stats.max_lg);
}

void finalize(VerificationReport* report) {
  report->pass = report->violations.empty();
  report->vacuous = report->qualifying == 0;
  if (!report->note.empty()) {
    report->note += "; ";
  }
  report->note += kDisclaimer;
  if (report->vacuous) {
    report->note += "; vacuous: no qualifying samples";
  }
}

void push_violation(VerificationReport* report, const Vector& x,
                    std::vector<std::pair<std::string, double>> quantities) {
  if (report->violations.size() < kMaxStoredViolations) {
    report->violations.push_back({x, std::move(quantities)});
  }
}

}  // namespace

VerificationReport check_od_cbc(const ControlAffineSystem& sys,
                                const ScalarField& h, const RegionBox& box,
                                const VerifyTols& tols) {
  const BoxSampling sampling = box_samples(box);
  const SweepStats stats = sweep_stats(&sys, h, sampling);
  const double tol_h = tols.tol_h.value_or(default_band(stats, sampling));
  const double tol_g = tols.tol_g.value_or(default_gate(stats));

  VerificationReport report;
  report.condition = "boundary-decay";
  report.samples = static_cast<long>(sampling.states.size());
  report.tolerances = {{"tol_h", tol_h}, {"tol_g", tol_g}, {"margin", tols.margin}};
  for (const Vector& x : sampling.states) {
    const double hv = h.value(x);
    if (std::abs(hv) > tol_h) {
      continue;
    }
    const LieData ld = lie(sys, h, x);
    if (ld.lg.norm() > tol_g) {
      continue;
    }
    ++report.qualifying;
    if (ld.lf <= tols.margin) {
      push_violation(&report, x,
                     {{"h", hv}, {"lg_norm", ld.lg.norm()}, {"lf", ld.lf}});
    }
  }
  finalize(&report);
  return report;
}

VerificationReport check_cbc(const ControlAffineSystem& sys,
                             const ScalarField& h, const ClassKe& alpha,
                             const RegionBox& box, const VerifyTols& tols) {
  const BoxSampling sampling = box_samples(box);
  const SweepStats stats = sweep_stats(&sys, h, sampling);
  const double tol_g = tols.tol_g.value_or(default_gate(stats));

  VerificationReport report;
  report.condition = "interior-decay";
  report.samples = static_cast<long>(sampling.states.size());
  report.tolerances = {{"tol_g", tol_g}};
  for (const Vector& x : sampling.states) {
    const double hv = h.value(x);
    if (hv < 0.0) {
      continue;
    }
    const LieData ld = lie(sys, h, x);
    if (ld.lg.norm() > tol_g) {
      continue;
    }
    ++report.qualifying;
    const double bound = -alpha.value(hv);
    if (ld.lf <= bound) {
      push_violation(&report, x,
                     {{"h", hv},
                      {"lg_norm", ld.lg.norm()},
                      {"lf", ld.lf},
                      {"decay_bound", bound}});
    }
  }
  finalize(&report);
  return report;
}

VerificationReport check_od_hocbf(
    const ControlAffineSystem& sys, const HocbfSpec& spec, const RegionBox& box,
    const VerifyTols& tols, const std::function<bool(const Vector&)>& region) {
  const ScalarField h = hocbf_build(sys, spec);
  // L_f psi as a field of its own; its Lie derivative along g is the
  // quantity whose vanishing is flagged.
  ScalarField lf_psi;
  {
    const ControlAffineSystem sys_copy = sys;
    const ScalarField psi = spec.psi;
    lf_psi.value = [sys_copy, psi](const Vector& x) {
      return psi.gradient(x).dot(sys_copy.drift(x));
    };
    if (spec.lf_psi_gradient) {
      lf_psi.gradient = *spec.lf_psi_gradient;
    } else {
      auto value = lf_psi.value;
      lf_psi.gradient = [value](const Vector& x) {
        return central_gradient(value, x);
      };
    }
  }

  const BoxSampling sampling = box_samples(box);
  const SweepStats h_stats = sweep_stats(nullptr, h, sampling);
  SweepStats gate_stats;
  gate_stats.max_lg = 0.0;
  for (const Vector& x : sampling.states) {
    gate_stats.max_lg =
        std::max(gate_stats.max_lg, lie(sys, lf_psi, x).lg.norm());
  }
  const double tol_h = tols.tol_h.value_or(default_band(h_stats, sampling));
  const double tol_g = tols.tol_g.value_or(default_gate(gate_stats));

  auto in_region = region ? region
                          : std::function<bool(const Vector&)>(
                                [&spec, &h](const Vector& x) {
                                  return spec.psi.value(x) >= 0.0 &&
                                         h.value(x) >= 0.0;
                                });

  VerificationReport report;
  report.condition = "second-order-prerequisite";
  report.samples = static_cast<long>(sampling.states.size());
  report.tolerances = {{"tol_h", tol_h}, {"tol_g", tol_g}};
  for (const Vector& x : sampling.states) {
    if (!in_region(x)) {
      continue;
    }
    const double hv = h.value(x);
    if (std::abs(hv) > tol_h) {
      continue;
    }
    ++report.qualifying;
    const double lglf = lie(sys, lf_psi, x).lg.norm();
    if (lglf <= tol_g) {
      push_violation(&report, x,
                     {{"psi", spec.psi.value(x)}, {"h", hv}, {"lglf_norm", lglf}});
    }
  }
  finalize(&report);
  return report;
}

VerificationReport check_od_recbc(const ControlAffineSystem& sys,
                                  const RecbfSpec& spec, const RegionBox& box,
                                  const VerifyTols& tols) {
  const ScalarField h = recbf_build(sys, spec);
  ScalarField lf_psi;
  {
    const ControlAffineSystem sys_copy = sys;
    const ScalarField psi = spec.psi;
    lf_psi.value = [sys_copy, psi](const Vector& x) {
      return psi.gradient(x).dot(sys_copy.drift(x));
    };
    if (spec.lf_psi_gradient) {
      lf_psi.gradient = *spec.lf_psi_gradient;
    } else {
      auto value = lf_psi.value;
      lf_psi.gradient = [value](const Vector& x) {
        return central_gradient(value, x);
      };
    }
  }

  const BoxSampling sampling = box_samples(box);
  const SweepStats h_stats = sweep_stats(nullptr, h, sampling);
  SweepStats gate_stats;
  for (const Vector& x : sampling.states) {
    gate_stats.max_lg =
        std::max(gate_stats.max_lg, lie(sys, lf_psi, x).lg.norm());
  }
  const double tol_h = tols.tol_h.value_or(default_band(h_stats, sampling));
  const double tol_g = tols.tol_g.value_or(default_gate(gate_stats));

  VerificationReport report;
  report.condition = "rectified-boundary-decay";
  report.samples = static_cast<long>(sampling.states.size());
  report.tolerances = {{"tol_h", tol_h}, {"tol_g", tol_g}};
  for (const Vector& x : sampling.states) {
    const double hv = h.value(x);
    if (hv < 0.0 || std::abs(hv) > tol_h) {
      continue;
    }
    const double lglf = lie(sys, lf_psi, x).lg.norm();
    if (lglf > tol_g) {
      continue;
    }
    ++report.qualifying;
    const double psi_v = spec.psi.value(x);
    const double lf_psi_v = lf_psi.value(x);
    const double threshold = -spec.alpha1.value(psi_v) + spec.eps;
    if (lf_psi_v < threshold) {
      push_violation(&report, x,
                     {{"h", hv},
                      {"lglf_norm", lglf},
                      {"lf_psi", lf_psi_v},
                      {"threshold", threshold}});
    }
  }
  finalize(&report);
  return report;
}

VerificationReport check_regular_value(const ScalarField& h,
                                       const RegionBox& box,
                                       const VerifyTols& tols) {
  const BoxSampling sampling = box_samples(box);
  const SweepStats stats = sweep_stats(nullptr, h, sampling);
  const double tol_h = tols.tol_h.value_or(default_band(stats, sampling));
  constexpr double kGradTol = 1e-8;

  VerificationReport report;
  report.condition = "regular-value";
  report.samples = static_cast<long>(sampling.states.size());
  report.tolerances = {{"tol_h", tol_h}, {"grad_tol", kGradTol}};
  for (const Vector& x : sampling.states) {
    const double hv = h.value(x);
    if (std::abs(hv) > tol_h) {
      continue;
    }
    ++report.qualifying;
    const double gn = h.gradient(x).norm();
    if (gn <= kGradTol) {
      push_violation(&report, x, {{"h", hv}, {"grad_norm", gn}});
    }
  }
  finalize(&report);
  return report;
}

}  // namespace odcbf

#include "odcbf/qp_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace odcbf {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-10;
constexpr double kObjectiveTieTol = 1e-12;

struct Candidate {
  Vector z;
  Vector mu;
  std::vector<int> active;
  double objective = 0.0;
};

double objective_value(const QpProblem& p, const Vector& z) {
  return 0.5 * z.dot(p.hessian * z) + p.linear.dot(z);
}

// Solves the equality-constrained KKT system for the active rows in `active`.
// Returns false when the system is singular or ill-conditioned.
bool solve_active_set(const QpProblem& p, const std::vector<int>& active,
                      Vector* z_out, Vector* mu_out) {
  const Eigen::Index d = p.hessian.rows();
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  Matrix kkt = Matrix::Zero(d + k, d + k);
  Vector rhs(d + k);
  kkt.topLeftCorner(d, d) = p.hessian;
  rhs.head(d) = -p.linear;
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vector row = p.constraints.row(active[static_cast<size_t>(i)]);
    kkt.block(d + i, 0, 1, d) = row.transpose();
    kkt.block(0, d + i, d, 1) = -row;
    rhs[d + i] = p.lower_bounds[active[static_cast<size_t>(i)]];
  }
  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) {
    return false;
  }
  const Vector sol = lu.solve(rhs);
  const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
  if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    return false;
  }
  *z_out = sol.head(d);
  Vector mu = Vector::Zero(p.constraints.rows());
  for (Eigen::Index i = 0; i < k; ++i) {
    mu[active[static_cast<size_t>(i)]] = sol[d + i];
  }
  *mu_out = mu;
  return true;
}

bool primal_feasible(const QpProblem& p, const Vector& z) {
  if (p.constraints.rows() == 0) {
    return true;
  }
  const Vector residual = p.constraints * z - p.lower_bounds;
  return residual.minCoeff() >= -kPrimalTol;
}

// Emptiness certificate for {z : A z >= lb}, exact for up to two effective
// rows: a zero row with a positive bound, or an anti-parallel pair of rows
// whose bounds exclude each other. Larger inconsistent families are not
// certified here.
bool certified_empty(const QpProblem& p) {
  const Eigen::Index k = p.constraints.rows();
  std::vector<double> norms(static_cast<size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    norms[static_cast<size_t>(i)] = p.constraints.row(i).norm();
    if (norms[static_cast<size_t>(i)] <= 1e-13 &&
        p.lower_bounds[i] > kPrimalTol) {
      return true;
    }
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double ni = norms[static_cast<size_t>(i)];
      const double nj = norms[static_cast<size_t>(j)];
      if (ni <= 1e-13 || nj <= 1e-13) {
        continue;
      }
      const Vector ri = p.constraints.row(i);
      const Vector rj = p.constraints.row(j);
      // Anti-parallel: r_i = -t r_j with t = ni / nj > 0.
      const double t = ni / nj;
      if ((ri + t * rj).cwiseAbs().maxCoeff() <= 1e-10 * std::max(ni, nj)) {
        // r_j z confined to [lb_j, -lb_i / t]; empty when that interval is.
        if (p.lower_bounds[j] > -p.lower_bounds[i] / t + kPrimalTol) {
          return true;
        }
      }
    }
  }
  return false;
}

void validate_problem(const QpProblem& p) {
  const Eigen::Index d = p.hessian.rows();
  if (p.hessian.cols() != d || d == 0) {
    throw DimensionError("solve_small_qp: hessian must be square");
  }
  if (p.linear.size() != d) {
    throw DimensionError("solve_small_qp: linear term dimension mismatch");
  }
  if (p.constraints.rows() != p.lower_bounds.size() ||
      (p.constraints.rows() > 0 && p.constraints.cols() != d)) {
    throw DimensionError("solve_small_qp: constraint dimension mismatch");
  }
  if (p.constraints.rows() > 16) {
    throw DomainError("solve_small_qp: more than 16 constraints");
  }
  Eigen::LLT<Matrix> llt(p.hessian);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("solve_small_qp: hessian must be positive definite");
  }
}

}  // namespace

QpSolution solve_small_qp(const QpProblem& problem) {
  validate_problem(problem);
  const int k = static_cast<int>(problem.constraints.rows());

  std::optional<Candidate> best;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < k; ++i) {
      if (mask & (1u << i)) {
        active.push_back(i);
      }
    }
    Vector z;
    Vector mu;
    if (!solve_active_set(problem, active, &z, &mu)) {
      continue;
    }
    if (!primal_feasible(problem, z)) {
      continue;
    }
    if (mu.size() > 0 && mu.minCoeff() < -kDualTol) {
      continue;
    }
    Candidate cand{z, mu.cwiseMax(0.0), active, objective_value(problem, z)};
    if (!best) {
      best = std::move(cand);
      continue;
    }
    const double tie = kObjectiveTieTol * (1.0 + std::abs(best->objective));
    if (cand.objective < best->objective - tie) {
      best = std::move(cand);
    } else if (std::abs(cand.objective - best->objective) <= tie &&
               std::lexicographical_compare(cand.active.begin(),
                                            cand.active.end(),
                                            best->active.begin(),
                                            best->active.end())) {
      best = std::move(cand);
    }
  }

  if (!best) {
    if (certified_empty(problem)) {
      throw InfeasibleError("solve_small_qp: constraints are inconsistent");
    }
    throw NumericalFailure(
        "solve_small_qp: no stationary candidate found and emptiness not "
        "certified");
  }

  QpSolution sol;
  sol.z = best->z;
  sol.multipliers = best->mu;
  sol.active_set = best->active;
  sol.objective = best->objective;
  return sol;
}

QpProblem build_od_program(const ControlAffineSystem& sys,
                           const ScalarField& h, const FilterConfig& cfg,
                           const Vector& x) {
  if (cfg.gamma.dim() != sys.input_dim) {
    throw DimensionError("build_od_program: Gamma dimension mismatch");
  }
  if (!(cfg.p > 0.0)) {
    throw DomainError("build_od_program: p must be positive");
  }
  const int m = sys.input_dim;
  const LieData ld = lie(sys, h, x);
  const double alpha_h = cfg.alpha.value(h.value(x));
  const Vector kd =
      cfg.k_d ? cfg.k_d(x) : Vector(Vector::Zero(m));

  QpProblem p;
  p.hessian = Matrix::Zero(m + 1, m + 1);
  p.hessian.topLeftCorner(m, m) = cfg.gamma.mat();
  p.hessian(m, m) = cfg.p;
  p.linear = Vector(m + 1);
  p.linear.head(m) = -(cfg.gamma.mat() * kd);
  p.linear[m] = -cfg.p * cfg.theta_d;
  p.constraints = Matrix::Zero(2, m + 1);
  p.constraints.block(0, 0, 1, m) = ld.lg.transpose();
  p.constraints(0, m) = alpha_h;
  p.constraints(1, m) = 1.0;
  p.lower_bounds = Vector(2);
  p.lower_bounds[0] = -ld.lf;
  p.lower_bounds[1] = cfg.theta_d;
  return p;
}

QpProblem build_cbf_program(const ControlAffineSystem& sys,
                            const ScalarField& h, const FilterConfig& cfg,
                            const Vector& x) {
  if (cfg.gamma.dim() != sys.input_dim) {
    throw DimensionError("build_cbf_program: Gamma dimension mismatch");
  }
  const int m = sys.input_dim;
  const LieData ld = lie(sys, h, x);
  const double alpha_h = cfg.alpha.value(h.value(x));
  const Vector kd =
      cfg.k_d ? cfg.k_d(x) : Vector(Vector::Zero(m));

  QpProblem p;
  p.hessian = cfg.gamma.mat();
  p.linear = -(cfg.gamma.mat() * kd);
  p.constraints = Matrix::Zero(1, m);
  p.constraints.row(0) = ld.lg.transpose();
  p.lower_bounds = Vector(1);
  p.lower_bounds[0] = -ld.lf - alpha_h;
  return p;
}

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& sol) {
  KktResiduals res;
  const Vector stat = problem.hessian * sol.z + problem.linear -
                      problem.constraints.transpose() * sol.multipliers;
  res.stationarity = stat.cwiseAbs().maxCoeff();
  if (problem.constraints.rows() > 0) {
    const Vector gap = problem.constraints * sol.z - problem.lower_bounds;
    res.primal = std::max(0.0, -gap.minCoeff());
    res.complementarity =
        (sol.multipliers.array() * gap.array()).abs().maxCoeff();
    res.dual = std::max(0.0, -sol.multipliers.minCoeff());
  }
  return res;
}

}  // namespace odcbf

#include "sparse_dfe/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sparse_dfe {

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("solver max_iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("solver tol must be > 0");
  if (!(l1_bisection_tol > 0.0)) throw ConfigError("l1 bisection tol must be > 0");
  if (!(l1_bound_scale > 0.0)) throw ConfigError("l1 bound scale must be > 0");
}

NormalEquations NormalEquations::from(const CMatrix& A, const CVector& y) {
  if (A.rows() != y.size()) {
    throw ShapeError("normal equations: A has " + std::to_string(A.rows()) + " rows, y has " +
                     std::to_string(y.size()) + " entries");
  }
  NormalEquations ne;
  ne.gram.noalias() = A.adjoint() * A;
  ne.rhs.noalias() = A.adjoint() * y;
  ne.y_energy = y.squaredNorm();
  return ne;
}

double NormalEquations::objective(const CVector& x) const {
  const CVector gx = gram * x;
  return y_energy - 2.0 * rhs.dot(x).real() + x.dot(gx).real();
}

double largest_eigenvalue(const CMatrix& hermitian, int max_iters, double rel_tol) {
  const auto n = hermitian.rows();
  if (n == 0) return 0.0;
  // Fixed pseudo-random start so structured matrices (Hadamard, DFT) cannot
  // hide their top eigenvector from it.
  CVector v(n);
  std::uint64_t s = 0x2545f4914f6cdd1dULL;
  for (Eigen::Index i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    const double re = static_cast<double>(s >> 11) * 0x1.0p-53 + 0.5;
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    const double im = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
    v[i] = {re, im};
  }
  v.normalize();
  double lambda = 0.0;
  CVector w(n);
  for (int it = 0; it < max_iters; ++it) {
    w.noalias() = hermitian * v;
    const double next = v.dot(w).real();
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    const bool done = it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

CVector ridge_ls(const NormalEquations& ne, double sigma2) {
  if (!(sigma2 >= 0.0)) throw ConfigError("ridge_ls: sigma2 must be non-negative");
  const auto n = ne.unknowns();
  if (n == 0) return CVector(0);
  CMatrix M = ne.gram;
  M.diagonal().array() += sigma2;
  Eigen::LLT<CMatrix> llt(M);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("ridge_ls: A^*A + sigma2 I is not positive definite");
  }
  if (sigma2 == 0.0 && llt.rcond() < 1e-13) {
    throw SingularityError("ridge_ls: A^*A is numerically singular (zero forcing undefined)");
  }
  return llt.solve(ne.rhs);
}

CVector ridge_ls(const CMatrix& A, const CVector& y, double sigma2) {
  if (A.rows() < A.cols()) throw ShapeError("ridge_ls: A must have at least as many rows as columns");
  return ridge_ls(NormalEquations::from(A, y), sigma2);
}

namespace {

void clip_in_place(CVector& x, double bound) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = clip_to_box(x[i], bound);
}

// Least-squares point with a vanishing ridge so rank-deficient Gram matrices
// still give a usable starting iterate.
CVector least_squares_start(const NormalEquations& ne) {
  const auto n = ne.unknowns();
  const double scale = std::max(ne.gram.diagonal().real().sum() / static_cast<double>(n), 1e-300);
  CMatrix M = ne.gram;
  M.diagonal().array() += 1e-12 * scale;
  Eigen::LLT<CMatrix> llt(M);
  if (llt.info() != Eigen::Success) return CVector::Zero(n);
  return llt.solve(ne.rhs);
}

}  // namespace

SolveResult box_ls(const NormalEquations& ne, double bound, const SolverConfig& cfg) {
  cfg.validate();
  if (!(bound > 0.0)) throw ConfigError("box_ls: bound must be > 0");
  const auto n = ne.unknowns();
  if (ne.gram.rows() != n || ne.rhs.size() != n) throw ShapeError("box_ls: inconsistent normal equations");

  SolveResult out;
  if (n == 0) {
    out.x = CVector(0);
    return out;
  }

  double lipschitz = largest_eigenvalue(ne.gram);
  if (!(lipschitz > 0.0)) {
    // A == 0: every feasible point is optimal.
    out.x = CVector::Zero(n);
    return out;
  }

  // Below this the Gram-form objective is rounding noise.
  const double noise_floor = 1e-12 * std::max(ne.y_energy, std::numeric_limits<double>::min());

  CVector x = least_squares_start(ne);
  clip_in_place(x, bound);
  // G x is shared between the objective and the next gradient.
  CVector gx = ne.gram * x;
  const auto objective = [&](const CVector& v, const CVector& gv) {
    return ne.y_energy - 2.0 * ne.rhs.dot(v).real() + v.dot(gv).real();
  };
  double f = objective(x, gx);
  if (cfg.record_objective) out.objective.push_back(f);

  CVector next(n);
  CVector g_next(n);
  out.converged = false;
  int it = 0;
  while (it < cfg.max_iters) {
    if (f <= noise_floor) {
      out.converged = true;
      break;
    }
    next = x - (gx - ne.rhs) / lipschitz;
    clip_in_place(next, bound);
    g_next.noalias() = ne.gram * next;
    const double f_next = objective(next, g_next);
    ++it;
    if (f_next > f + noise_floor) {
      // The power-iteration estimate undershot lambda_max; halve the step.
      lipschitz *= 2.0;
      continue;
    }
    const double decrease = f - f_next;
    x.swap(next);
    gx.swap(g_next);
    f = f_next;
    if (cfg.record_objective) out.objective.push_back(f);
    if (decrease <= cfg.tol * f) {
      out.converged = true;
      break;
    }
  }
  out.iterations = it;
  out.x = std::move(x);
  return out;
}

SolveResult box_ls(const CMatrix& A, const CVector& y, double bound, const SolverConfig& cfg) {
  if (A.rows() < A.cols()) throw ShapeError("box_ls: A must have at least as many rows as columns");
  return box_ls(NormalEquations::from(A, y), bound, cfg);
}

namespace {

// Accelerated proximal gradient for 1/2 ||A e - r||^2 + lambda ||e||_1.
CVector lasso_solve(const NormalEquations& ne, double lipschitz, double lambda, CVector e,
                    const SolverConfig& cfg, int& iterations) {
  const auto n = ne.unknowns();
  const double shrink = lambda / lipschitz;
  const double step_tol = std::sqrt(cfg.tol);
  CVector z = e;
  CVector grad(n);
  CVector next(n);
  double t = 1.0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    grad.noalias() = ne.gram * z;
    grad -= ne.rhs;
    next = z - grad / lipschitz;
    for (Eigen::Index i = 0; i < n; ++i) next[i] = soft_threshold(next[i], shrink);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - e);
    const double moved = (next - e).norm();
    e.swap(next);
    t = t_next;
    ++iterations;
    if (moved <= step_tol * std::max(e.norm(), 1e-300)) break;
  }
  return e;
}

double l1_norm(const CVector& v) { return v.cwiseAbs().sum(); }

}  // namespace

SolveResult l1_constrained(const NormalEquations& ne, double energy_bound, const SolverConfig& cfg) {
  cfg.validate();
  if (!(energy_bound >= 0.0)) throw ConfigError("l1_constrained: energy bound must be >= 0");
  const auto n = ne.unknowns();
  if (ne.gram.rows() != n || ne.rhs.size() != n) {
    throw ShapeError("l1_constrained: inconsistent normal equations");
  }

  SolveResult out;
  out.x = CVector::Zero(n);
  if (ne.y_energy <= energy_bound || n == 0) return out;

  const double floor = 1e-12 * ne.y_energy;
  const auto feasible = [&](double res) {
    return res <= energy_bound * (1.0 + cfg.l1_bisection_tol) + floor;
  };
  const auto on_target = [&](double res) {
    return std::abs(res - energy_bound) <= cfg.l1_bisection_tol * energy_bound + floor;
  };

  const double lipschitz = largest_eigenvalue(ne.gram) * 1.01;
  if (!(lipschitz > 0.0)) {
    out.converged = false;
    return out;
  }

  // lambda >= max |A^* r| gives e = 0 with residual ||r||^2 > bound, so the
  // bracket's upper end is infeasible. The lower end is least squares.
  double hi = ne.rhs.cwiseAbs().maxCoeff();
  double lo = 0.0;

  CVector best;
  double best_l1 = std::numeric_limits<double>::infinity();
  CVector ls;
  try {
    ls = ridge_ls(ne, 0.0);
  } catch (const SingularityError&) {
    ls = least_squares_start(ne);
  }
  const double ls_res = ne.objective(ls);
  if (!feasible(ls_res)) {
    // Even the least-squares fit leaves more than the allowed energy.
    out.x = ls;
    out.converged = false;
    return out;
  }
  if (on_target(ls_res)) {
    out.x = ls;
    return out;
  }
  best = ls;
  best_l1 = l1_norm(ls);

  CVector e = CVector::Zero(n);
  for (int step = 0; step < 100; ++step) {
    const double lambda = 0.5 * (lo + hi);
    e = lasso_solve(ne, lipschitz, lambda, std::move(e), cfg, out.iterations);
    const double res = ne.objective(e);
    if (feasible(res)) {
      const double l1 = l1_norm(e);
      if (l1 < best_l1) {
        best_l1 = l1;
        best = e;
      }
    }
    if (on_target(res)) {
      out.x = std::move(e);
      return out;
    }
    (res > energy_bound ? hi : lo) = lambda;
    if (hi - lo <= 1e-14 * hi) break;
  }
  out.x = std::move(best);
  out.converged = false;
  return out;
}

SolveResult l1_constrained(const CMatrix& A, const CVector& r, double energy_bound,
                           const SolverConfig& cfg) {
  return l1_constrained(NormalEquations::from(A, r), energy_bound, cfg);
}

}  // namespace sparse_dfe

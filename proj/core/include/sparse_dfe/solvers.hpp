#pragma once

#include <vector>

#include "sparse_dfe/common.hpp"

namespace sparse_dfe {

enum class StepRule { FixedInverseLipschitz };

struct SolverConfig {
  int max_iters = 2000;
  // Relative objective decrease below which an iterative solve stops.
  double tol = 1e-8;
  StepRule step_rule = StepRule::FixedInverseLipschitz;
  // Relative tolerance on the residual energy when bisecting the l1 multiplier.
  double l1_bisection_tol = 1e-2;
  // The l1 residual ball is rows * sigma2 * l1_bound_scale.
  double l1_bound_scale = 1.0;
  // Keep the per-iteration objective of box_ls in SolveResult::objective.
  bool record_objective = false;

  // Throws ConfigError on max_iters < 1, tol <= 0 or non-positive scales.
  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct SolveResult {
  CVector x;
  bool converged = true;
  int iterations = 0;
  // ||A x_k - y||^2 per iterate, only when SolverConfig::record_objective.
  std::vector<double> objective;
};

// Gram form of min ||A x - y||^2. Solvers below work on this form so callers
// that already hold A^* A (for instance as a principal submatrix of a larger
// Gram matrix) avoid recomputing it.
struct NormalEquations {
  CMatrix gram;           // A^* A
  CVector rhs;            // A^* y
  double y_energy = 0.0;  // ||y||^2

  static NormalEquations from(const CMatrix& A, const CVector& y);

  Eigen::Index unknowns() const noexcept { return gram.cols(); }
  // ||A x - y||^2 evaluated through the Gram form.
  double objective(const CVector& x) const;
};

// Largest eigenvalue of a Hermitian positive semidefinite matrix by power
// iteration (stops after max_iters or when the relative change is < rel_tol).
double largest_eigenvalue(const CMatrix& hermitian, int max_iters = 50, double rel_tol = 1e-8);

// Box-constrained least squares
//   min ||A x - y||^2  s.t. |Re x_i| <= bound, |Im x_i| <= bound
// by projected gradient with step 1/L, L the power-iteration estimate of
// lambda_max(A^* A). The first iterate is the clipped least-squares point.
// The returned x always satisfies the box exactly. converged == false means
// max_iters was hit; x is then the best iterate seen.
SolveResult box_ls(const CMatrix& A, const CVector& y, double bound, const SolverConfig& cfg);
SolveResult box_ls(const NormalEquations& ne, double bound, const SolverConfig& cfg);

// min ||e||_1 s.t. ||A e - r||^2 <= energy_bound, through the Lagrangian form
// 1/2 ||A e - r||^2 + lambda ||e||_1 solved by accelerated proximal gradient
// with complex soft thresholding, bisecting lambda until the residual energy
// is within cfg.l1_bisection_tol of energy_bound. Returns zero when
// ||r||^2 <= energy_bound.
SolveResult l1_constrained(const CMatrix& A, const CVector& r, double energy_bound,
                           const SolverConfig& cfg);
SolveResult l1_constrained(const NormalEquations& ne, double energy_bound,
                           const SolverConfig& cfg);

// (A^* A + sigma2 I)^{-1} A^* y via Cholesky. With sigma2 == 0 this is the
// least-squares (zero-forcing) solution and throws SingularityError when
// A^* A is numerically singular.
CVector ridge_ls(const CMatrix& A, const CVector& y, double sigma2);
CVector ridge_ls(const NormalEquations& ne, double sigma2);

// Complex soft threshold: shrinks the modulus by tau, keeps the phase.
inline cplx soft_threshold(cplx v, double tau) noexcept {
  const double mag = std::abs(v);
  return mag <= tau ? cplx{0.0, 0.0} : v * ((mag - tau) / mag);
}

// Clips real and imaginary parts independently to [-bound, bound].
inline cplx clip_to_box(cplx v, double bound) noexcept {
  const auto clip = [bound](double t) { return t > bound ? bound : (t < -bound ? -bound : t); };
  return {clip(v.real()), clip(v.imag())};
}

}  // namespace sparse_dfe

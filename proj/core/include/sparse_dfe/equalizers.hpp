#pragma once

#include <string_view>

#include "sparse_dfe/common.hpp"
#include "sparse_dfe/constellation.hpp"
#include "sparse_dfe/solvers.hpp"

namespace sparse_dfe {

enum class EqualizerKind { ZF, MMSE, ConvexRelaxation };

std::string_view to_string(EqualizerKind k);
// CLI tokens `zf | mmse | convex`.
EqualizerKind parse_equalizer(std::string_view token);

// Pre-detection coefficients for the active unknowns.
struct SoftEstimate {
  CVector values;
  EqualizerKind kind = EqualizerKind::MMSE;
  // False when the convex solver stopped at max_iters.
  bool converged = true;
};

// ZF       -> ridge_ls with sigma2 = 0
// MMSE     -> ridge_ls with the given sigma2
// Convex   -> box_ls with bound = c.box_bound()
// A may be tall (rows >= cols), which is how the feedback loop calls it.
SoftEstimate equalize(EqualizerKind kind, const CMatrix& A, const CVector& y, double sigma2,
                      const Constellation& c, const SolverConfig& cfg);
SoftEstimate equalize(EqualizerKind kind, const NormalEquations& ne, double sigma2,
                      const Constellation& c, const SolverConfig& cfg);

HardDecision equalize_and_detect(EqualizerKind kind, const CMatrix& A, const CVector& y,
                                 double sigma2, const Constellation& c, const SolverConfig& cfg);

// Closed form of ZF/MMSE for a square system A = diag(h) U with U unitary:
// x = U^* (conj(h) / (|h|^2 + sigma2)) y. Costs one matrix-vector product.
CVector linear_equalize_diagonal(const CVector& h, const CMatrix& U, const CVector& y,
                                 double sigma2);

}  // namespace sparse_dfe

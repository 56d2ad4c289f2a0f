#include "sparse_dfe/equalizers.hpp"

#include <string>

namespace sparse_dfe {

std::string_view to_string(EqualizerKind k) {
  switch (k) {
    case EqualizerKind::ZF: return "zf";
    case EqualizerKind::MMSE: return "mmse";
    case EqualizerKind::ConvexRelaxation: return "convex";
  }
  return "?";
}

EqualizerKind parse_equalizer(std::string_view token) {
  if (token == "zf") return EqualizerKind::ZF;
  if (token == "mmse") return EqualizerKind::MMSE;
  if (token == "convex") return EqualizerKind::ConvexRelaxation;
  throw ConfigError("unknown equalizer '" + std::string(token) + "' (expected zf|mmse|convex)");
}

SoftEstimate equalize(EqualizerKind kind, const NormalEquations& ne, double sigma2,
                      const Constellation& c, const SolverConfig& cfg) {
  SoftEstimate est;
  est.kind = kind;
  switch (kind) {
    case EqualizerKind::ZF:
      est.values = ridge_ls(ne, 0.0);
      break;
    case EqualizerKind::MMSE:
      est.values = ridge_ls(ne, sigma2);
      break;
    case EqualizerKind::ConvexRelaxation: {
      SolveResult res = box_ls(ne, c.box_bound(), cfg);
      est.values = std::move(res.x);
      est.converged = res.converged;
      break;
    }
  }
  return est;
}

SoftEstimate equalize(EqualizerKind kind, const CMatrix& A, const CVector& y, double sigma2,
                      const Constellation& c, const SolverConfig& cfg) {
  if (A.rows() < A.cols()) {
    throw ShapeError("equalize: A is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                     ", rows must be >= cols");
  }
  return equalize(kind, NormalEquations::from(A, y), sigma2, c, cfg);
}

HardDecision equalize_and_detect(EqualizerKind kind, const CMatrix& A, const CVector& y,
                                 double sigma2, const Constellation& c, const SolverConfig& cfg) {
  return detect(equalize(kind, A, y, sigma2, c, cfg).values, c);
}

CVector linear_equalize_diagonal(const CVector& h, const CMatrix& U, const CVector& y,
                                 double sigma2) {
  if (h.size() != y.size() || U.rows() != h.size()) throw ShapeError("linear_equalize_diagonal: shape mismatch");
  CVector w(h.size());
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    const double g = std::norm(h[k]) + sigma2;
    if (g == 0.0) throw SingularityError("linear_equalize_diagonal: zero channel gain with sigma2 = 0");
    w[k] = std::conj(h[k]) * y[k] / g;
  }
  return U.adjoint() * w;
}

}  // namespace sparse_dfe

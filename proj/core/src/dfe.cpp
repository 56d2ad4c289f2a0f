#include "sparse_dfe/dfe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sparse_dfe {

std::string_view to_string(ErrorEstimator e) {
  return e == ErrorEstimator::MatchedFilter ? "mf" : "l1";
}

std::string_view to_string(ThresholdRule r) {
  switch (r) {
    case ThresholdRule::Adaptive: return "adaptive";
    case ThresholdRule::LogMOnly: return "logm";
    case ThresholdRule::FeedbackOne: return "feedback-one";
  }
  return "?";
}

ErrorEstimator parse_error_estimator(std::string_view token) {
  if (token == "mf") return ErrorEstimator::MatchedFilter;
  if (token == "l1") return ErrorEstimator::L1;
  throw ConfigError("unknown error estimator '" + std::string(token) + "' (expected mf|l1)");
}

ThresholdRule parse_threshold_rule(std::string_view token) {
  if (token == "adaptive") return ThresholdRule::Adaptive;
  if (token == "logm") return ThresholdRule::LogMOnly;
  if (token == "feedback-one") return ThresholdRule::FeedbackOne;
  throw ConfigError("unknown feedback rule '" + std::string(token) +
                    "' (expected adaptive|logm|feedback-one)");
}

void DfeConfig::validate() const {
  if (max_outer_iters < 0) throw ConfigError("max_outer_iters must be >= 1 (or 0 for 2m)");
  solver.validate();
}

DfeState DfeState::initial(const CMatrix& A, const CVector& y) {
  if (A.rows() != y.size()) throw ShapeError("DfeState: A and y disagree in length");
  DfeState s;
  s.active.resize(static_cast<std::size_t>(A.cols()));
  for (std::size_t i = 0; i < s.active.size(); ++i) s.active[i] = static_cast<int>(i);
  s.y = y;
  s.A = A;
  s.decided.assign(static_cast<std::size_t>(A.cols()), -1);
  return s;
}

CVector residual(const CVector& y_k, const CMatrix& A_k, const CVector& xhat_k) {
  if (A_k.rows() != y_k.size() || A_k.cols() != xhat_k.size()) {
    throw ShapeError("residual: A_k is " + std::to_string(A_k.rows()) + "x" +
                     std::to_string(A_k.cols()) + ", y_k has " + std::to_string(y_k.size()) +
                     ", x_hat has " + std::to_string(xhat_k.size()));
  }
  CVector r = y_k;
  r.noalias() -= A_k * xhat_k;
  return r;
}

CVector residual(const CVector& y_k, const CMatrix& A_k, const HardDecision& xhat_k,
                 const Constellation& c) {
  return residual(y_k, A_k, c.values(xhat_k));
}

ErrorEstimate error_estimate_mf(const CMatrix& A_k, const CVector& r_k) {
  if (A_k.rows() != r_k.size()) throw ShapeError("error_estimate_mf: shape mismatch");
  ErrorEstimate e;
  e.values.noalias() = A_k.adjoint() * r_k;
  e.estimator = ErrorEstimator::MatchedFilter;
  return e;
}

namespace {

ErrorEstimate l1_estimate(const NormalEquations& ne, long rows, double sigma2,
                          const SolverConfig& cfg) {
  const double bound = static_cast<double>(rows) * sigma2 * cfg.l1_bound_scale;
  SolveResult res = l1_constrained(ne, bound, cfg);
  ErrorEstimate e;
  e.values = std::move(res.x);
  e.estimator = ErrorEstimator::L1;
  e.converged = res.converged;
  return e;
}

}  // namespace

ErrorEstimate error_estimate_l1(const CMatrix& A_k, const CVector& r_k, double sigma2,
                                const SolverConfig& cfg) {
  return l1_estimate(NormalEquations::from(A_k, r_k), A_k.rows(), sigma2, cfg);
}

double sparsity_estimate(const CVector& r_k, double s_min) {
  if (!(s_min > 0.0)) throw ConfigError("sparsity_estimate: s_min must be > 0");
  return r_k.squaredNorm() / (s_min * s_min);
}

double adaptive_threshold(long m_k, double rho_k, double r_norm, long norm_length) {
  if (m_k < 1) throw ConfigError("threshold: m_k must be >= 1");
  const double m = static_cast<double>(m_k);
  const double n = static_cast<double>(norm_length > 0 ? norm_length : m_k);
  const double rho = std::clamp(rho_k, 1e-12, m / std::numbers::e);
  return std::sqrt(2.0 * std::log(m / rho)) * r_norm / std::sqrt(n);
}

double log_m_threshold(long m_k, double r_norm, long norm_length) {
  if (m_k < 1) throw ConfigError("threshold: m_k must be >= 1");
  const double n = static_cast<double>(norm_length > 0 ? norm_length : m_k);
  return std::sqrt(2.0 * std::log(static_cast<double>(m_k))) * r_norm / std::sqrt(n);
}

double threshold(ThresholdRule rule, long m_k, double rho_k, double r_norm, long norm_length) {
  switch (rule) {
    case ThresholdRule::Adaptive: return adaptive_threshold(m_k, rho_k, r_norm, norm_length);
    case ThresholdRule::LogMOnly: return log_m_threshold(m_k, r_norm, norm_length);
    case ThresholdRule::FeedbackOne: return 0.0;
  }
  return 0.0;
}

std::vector<int> select_feedback(const ErrorEstimate& e_hat, double t, ThresholdRule rule) {
  const auto n = e_hat.values.size();
  std::vector<int> selected;
  if (n == 0) return selected;
  if (rule != ThresholdRule::FeedbackOne) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(e_hat.values[i]) < t) selected.push_back(static_cast<int>(i));
    }
    if (!selected.empty()) return selected;
  }
  Eigen::Index best = 0;
  double best_mag = std::abs(e_hat.values[0]);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double mag = std::abs(e_hat.values[i]);
    if (mag < best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  selected.push_back(static_cast<int>(best));
  return selected;
}

DfeState cancel_interference(DfeState state, std::span<const int> selected,
                             const HardDecision& xhat_k, const Constellation& c,
                             IterationRecord record) {
  const auto k = static_cast<int>(state.active.size());
  if (selected.empty()) throw ShapeError("cancel_interference: empty selection");
  if (static_cast<int>(xhat_k.size()) != k || state.A.cols() != k) {
    throw ShapeError("cancel_interference: decision/active size mismatch");
  }
  std::vector<char> chosen(static_cast<std::size_t>(k), 0);
  for (int p : selected) {
    if (p < 0 || p >= k) throw ShapeError("cancel_interference: selection out of range");
    chosen[static_cast<std::size_t>(p)] = 1;
  }

  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(k));
  for (int p = 0; p < k; ++p) {
    const auto sp = static_cast<std::size_t>(p);
    if (chosen[sp]) {
      state.y -= state.A.col(p) * c.point(xhat_k.symbols[sp]);
      state.decided[static_cast<std::size_t>(state.active[sp])] = xhat_k.symbols[sp];
    } else {
      keep.push_back(p);
    }
  }

  CMatrix reduced(state.A.rows(), static_cast<Eigen::Index>(keep.size()));
  std::vector<int> active;
  active.reserve(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    reduced.col(static_cast<Eigen::Index>(j)) = state.A.col(keep[j]);
    active.push_back(state.active[static_cast<std::size_t>(keep[j])]);
  }
  state.A = std::move(reduced);
  state.active = std::move(active);

  record.iteration = state.iteration;
  record.fed_back = static_cast<int>(k - static_cast<int>(state.active.size()));
  state.trace.push_back(std::move(record));
  ++state.iteration;
  return state;
}

namespace {

// Produces normal equations for the active columns, reusing a precomputed
// full Gram matrix when the loop will need many of them.
class ActiveSystem {
 public:
  ActiveSystem(const CMatrix& A, bool precompute_gram) {
    if (precompute_gram) gram_.noalias() = A.adjoint() * A;
  }

  NormalEquations build(const DfeState& s) const {
    if (gram_.size() == 0) return NormalEquations::from(s.A, s.y);
    NormalEquations ne;
    ne.gram = gram_(s.active, s.active);
    ne.rhs.noalias() = s.A.adjoint() * s.y;
    ne.y_energy = s.y.squaredNorm();
    return ne;
  }

  NormalEquations build_for_residual(const DfeState& s, const CVector& r) const {
    if (gram_.size() == 0) return NormalEquations::from(s.A, r);
    NormalEquations ne;
    ne.gram = gram_(s.active, s.active);
    ne.rhs.noalias() = s.A.adjoint() * r;
    ne.y_energy = r.squaredNorm();
    return ne;
  }

 private:
  CMatrix gram_;
};

// (G_k + sigma2 I)^{-1} for the active columns, shrunk in place when
// columns are removed instead of refactorizing every iteration.
class MmseInverse {
 public:
  bool ready(long k) const noexcept { return inv_.rows() == k && k > 0; }

  bool build(const CMatrix& gram, double sigma2) {
    CMatrix M = gram;
    M.diagonal().array() += sigma2;
    Eigen::LLT<CMatrix> llt(M);
    if (llt.info() != Eigen::Success) {
      inv_.resize(0, 0);
      return false;
    }
    inv_ = llt.solve(CMatrix::Identity(M.rows(), M.cols()));
    return true;
  }

  const CMatrix& inverse() const noexcept { return inv_; }

  // Drops the rows and columns at `removed` (positions, increasing) via the
  // Schur complement of the inverse.
  void remove(const std::vector<int>& removed) {
    const auto k = static_cast<int>(inv_.rows());
    std::vector<char> gone(static_cast<std::size_t>(k), 0);
    for (int p : removed) gone[static_cast<std::size_t>(p)] = 1;
    std::vector<int> kept;
    kept.reserve(static_cast<std::size_t>(k));
    for (int p = 0; p < k; ++p) {
      if (!gone[static_cast<std::size_t>(p)]) kept.push_back(p);
    }
    if (kept.empty()) {
      inv_.resize(0, 0);
      return;
    }
    const CMatrix ss = inv_(removed, removed);
    const CMatrix ks = inv_(kept, removed);
    CMatrix next = inv_(kept, kept);
    next.noalias() -= ks * ss.llt().solve(ks.adjoint());
    inv_ = std::move(next);
  }

 private:
  CMatrix inv_;
};

CVector mmse_fallback(const NormalEquations& ne, double sigma2) {
  double reg = sigma2;
  if (reg == 0.0) {
    const auto n = std::max<Eigen::Index>(ne.unknowns(), 1);
    reg = 1e-10 * std::max(ne.gram.diagonal().real().sum() / static_cast<double>(n), 1e-300);
  }
  return ridge_ls(ne, reg);
}

}  // namespace

DfeResult run_dfe(const SystemInstance& instance, const DfeConfig& cfg) {
  cfg.validate();
  if (instance.constellation == nullptr) throw ConfigError("run_dfe: instance has no constellation");
  const Constellation& c = *instance.constellation;
  const CMatrix& A = instance.A;
  const long m = static_cast<long>(A.cols());
  if (A.rows() < A.cols()) throw ShapeError("run_dfe: A must have rows >= cols");
  const int max_outer = cfg.max_outer_iters > 0 ? cfg.max_outer_iters : static_cast<int>(2 * m);

  const bool many_solves = cfg.threshold_rule == ThresholdRule::FeedbackOne ||
                           cfg.equalizer == EqualizerKind::ConvexRelaxation ||
                           cfg.error_estimator == ErrorEstimator::L1;
  const ActiveSystem system(A, many_solves);
  const bool diagonal_first_pass = instance.unitary_spreading && A.rows() == A.cols() &&
                                   cfg.equalizer != EqualizerKind::ConvexRelaxation &&
                                   instance.h.size() == A.rows();

  // Feeding back one symbol per iteration makes the inverse downdate much
  // cheaper than a fresh factorization of every reduced MMSE system.
  const bool use_inverse = cfg.threshold_rule == ThresholdRule::FeedbackOne &&
                           cfg.equalizer == EqualizerKind::MMSE && instance.sigma2 > 0.0;
  MmseInverse inverse;

  DfeState state = DfeState::initial(A, instance.y);
  std::vector<int> tentative(static_cast<std::size_t>(m), 0);
  const double sigma2 = instance.sigma2;
  const double zero_residual = 1e-12 * std::sqrt(static_cast<double>(A.rows()));
  bool flagged = false;

  while (!state.done() && state.iteration < max_outer) {
    const long k = static_cast<long>(state.active.size());
    IterationRecord rec;
    rec.active_before = static_cast<int>(k);

    CVector soft;
    std::optional<NormalEquations> ne;
    const auto normal_equations = [&]() -> const NormalEquations& {
      if (!ne) ne = system.build(state);
      return *ne;
    };
    if (use_inverse && state.iteration > 0 &&
        (inverse.ready(k) || inverse.build(normal_equations().gram, sigma2))) {
      soft.noalias() = inverse.inverse() * (state.A.adjoint() * state.y);
    } else if (state.iteration == 0 && diagonal_first_pass) {
      const double s2 = cfg.equalizer == EqualizerKind::MMSE ? sigma2 : 0.0;
      try {
        soft = linear_equalize_diagonal(instance.h, instance.U, state.y, s2);
      } catch (const SingularityError&) {
        soft = linear_equalize_diagonal(instance.h, instance.U, state.y,
                                        std::max(sigma2, 1e-10));
        rec.solver_fallback = true;
      }
    } else {
      try {
        SoftEstimate est = equalize(cfg.equalizer, normal_equations(), sigma2, c, cfg.solver);
        if (est.converged) {
          soft = std::move(est.values);
        } else {
          rec.solver_fallback = true;
        }
      } catch (const SingularityError&) {
        rec.solver_fallback = true;
      }
      if (rec.solver_fallback) soft = mmse_fallback(normal_equations(), sigma2);
    }

    const HardDecision xhat = detect(soft, c);
    for (long p = 0; p < k; ++p) {
      tentative[static_cast<std::size_t>(state.active[static_cast<std::size_t>(p)])] =
          xhat.symbols[static_cast<std::size_t>(p)];
    }
    const CVector r = residual(state.y, state.A, xhat, c);
    rec.residual_norm = r.norm();
    rec.rho = sparsity_estimate(r, c.s_min());

    std::vector<int> selected;
    ErrorEstimate e_hat;
    if (rec.residual_norm < zero_residual) {
      rec.zero_residual = true;
      selected.resize(static_cast<std::size_t>(k));
      for (long p = 0; p < k; ++p) selected[static_cast<std::size_t>(p)] = static_cast<int>(p);
      e_hat.values = CVector::Zero(k);
    } else {
      if (cfg.error_estimator == ErrorEstimator::MatchedFilter) {
        e_hat = error_estimate_mf(state.A, r);
      } else {
        e_hat = l1_estimate(system.build_for_residual(state, r), state.A.rows(), sigma2, cfg.solver);
        rec.estimator_flag = !e_hat.converged;
      }
      const long norm_len =
          cfg.normalization == ThresholdNormalization::BlockLength ? m : k;
      rec.threshold = threshold(cfg.threshold_rule, k, rec.rho, rec.residual_norm, norm_len);
      selected = select_feedback(e_hat, rec.threshold, cfg.threshold_rule);
    }

    if (cfg.keep_snapshots) {
      IterationSnapshot snap;
      snap.active = state.active;
      snap.detected = xhat.symbols;
      snap.e_hat = e_hat.values;
      for (int p : selected) snap.selected.push_back(state.active[static_cast<std::size_t>(p)]);
      rec.snapshot = std::move(snap);
    }
    flagged = flagged || rec.solver_fallback || rec.estimator_flag;
    if (inverse.ready(k)) {
      std::vector<int> removed = selected;
      std::sort(removed.begin(), removed.end());
      inverse.remove(removed);
    }
    state = cancel_interference(std::move(state), selected, xhat, c, std::move(rec));
  }

  DfeResult out;
  out.decisions.symbols.resize(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) {
    const auto si = static_cast<std::size_t>(i);
    out.decisions.symbols[si] = state.decided[si] >= 0 ? state.decided[si] : tentative[si];
  }
  out.iterations = state.iteration;
  out.trace = std::move(state.trace);
  out.flagged = flagged;
  return out;
}

}  // namespace sparse_dfe

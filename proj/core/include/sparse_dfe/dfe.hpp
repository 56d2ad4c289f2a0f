#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sparse_dfe/common.hpp"
#include "sparse_dfe/constellation.hpp"
#include "sparse_dfe/equalizers.hpp"
#include "sparse_dfe/solvers.hpp"
#include "sparse_dfe/system_model.hpp"

namespace sparse_dfe {

enum class ErrorEstimator { MatchedFilter, L1 };

enum class ThresholdRule {
  Adaptive,     // sqrt(2 ln(m_k / rho_k)) ||r_k|| / sqrt(m_k)
  LogMOnly,     // sqrt(2 ln m_k) ||r_k|| / sqrt(m_k), no sparsity penalty
  FeedbackOne,  // feed back only the smallest |e_hat| entry
};

// Which length divides ||r_k|| in the threshold. The active-unknown count is
// the default; the block length is kept for comparison runs.
enum class ThresholdNormalization { ActiveUnknowns, BlockLength };

std::string_view to_string(ErrorEstimator e);
std::string_view to_string(ThresholdRule r);
ErrorEstimator parse_error_estimator(std::string_view token);  // mf | l1
ThresholdRule parse_threshold_rule(std::string_view token);    // adaptive | logm | feedback-one

struct DfeConfig {
  EqualizerKind equalizer = EqualizerKind::MMSE;
  ErrorEstimator error_estimator = ErrorEstimator::MatchedFilter;
  ThresholdRule threshold_rule = ThresholdRule::Adaptive;
  // Upper bound on outer iterations; 0 means 2 m.
  int max_outer_iters = 0;
  SolverConfig solver;
  ThresholdNormalization normalization = ThresholdNormalization::ActiveUnknowns;
  // Record per-iteration error-signal snapshots in the trace.
  bool keep_snapshots = false;

  void validate() const;
  bool operator==(const DfeConfig&) const = default;
};

struct ErrorEstimate {
  CVector values;  // one entry per active unknown
  ErrorEstimator estimator = ErrorEstimator::MatchedFilter;
  bool converged = true;
};

// Error-signal data of one iteration, all indexed like `active`.
struct IterationSnapshot {
  std::vector<int> active;    // original positions still undecided
  std::vector<int> detected;  // symbol indices of x_hat_k
  CVector e_hat;
  std::vector<int> selected;  // original positions fed back
};

struct IterationRecord {
  int iteration = 0;
  int active_before = 0;
  double threshold = 0.0;
  double rho = 0.0;
  double residual_norm = 0.0;
  int fed_back = 0;
  // Initial solution fell back to MMSE (convex stall or ZF singularity).
  bool solver_fallback = false;
  // l1 error estimate did not reach its residual target.
  bool estimator_flag = false;
  // ||r_k|| was numerically zero and every active symbol was fed back.
  bool zero_residual = false;
  std::optional<IterationSnapshot> snapshot;
};

// Loop state. `active` lists undecided original positions in increasing
// order; `decided[i]` is the symbol index fed back for position i, or -1.
struct DfeState {
  std::vector<int> active;
  CVector y;  // interference-reduced observation y_k
  CMatrix A;  // columns of the original A at `active`
  std::vector<int> decided;
  int iteration = 0;
  std::vector<IterationRecord> trace;

  static DfeState initial(const CMatrix& A, const CVector& y);
  bool done() const noexcept { return active.empty(); }
};

struct DfeResult {
  HardDecision decisions;  // all m positions in original order
  std::vector<IterationRecord> trace;
  int iterations = 0;
  bool flagged = false;  // any solver fallback or estimator flag
};

// r_k = y_k - A_k x_hat_k.
CVector residual(const CVector& y_k, const CMatrix& A_k, const CVector& xhat_k);
CVector residual(const CVector& y_k, const CMatrix& A_k, const HardDecision& xhat_k,
                 const Constellation& c);

// Matched filter e_hat_k = A_k^* r_k.
ErrorEstimate error_estimate_mf(const CMatrix& A_k, const CVector& r_k);

// l1 estimate with residual ball rows(A_k) * sigma2 * cfg.l1_bound_scale.
ErrorEstimate error_estimate_l1(const CMatrix& A_k, const CVector& r_k, double sigma2,
                                const SolverConfig& cfg);

// rho_k = ||r_k||^2 / s_min^2, the estimated number of wrong decisions.
double sparsity_estimate(const CVector& r_k, double s_min);

// Adaptive threshold with rho clamped to [1e-12, m_k / e] so the logarithm
// stays >= 1. `norm_length` divides ||r_k|| (defaults to m_k).
double adaptive_threshold(long m_k, double rho_k, double r_norm, long norm_length = 0);
double log_m_threshold(long m_k, double r_norm, long norm_length = 0);

// Dispatches on the rule; FeedbackOne returns 0 (selection ignores it).
double threshold(ThresholdRule rule, long m_k, double rho_k, double r_norm,
                 long norm_length = 0);

// Positions (into the active list, increasing) with |e_hat_i| < t. An empty
// set becomes {argmin |e_hat_i|}, which is also the FeedbackOne answer.
// Ties go to the lowest position.
std::vector<int> select_feedback(const ErrorEstimate& e_hat, double t,
                                 ThresholdRule rule = ThresholdRule::Adaptive);

// Subtracts the selected decisions from y_k, drops their columns from A_k,
// records them as decided and appends `record` to the trace.
// Throws ShapeError on an empty or out-of-range selection.
DfeState cancel_interference(DfeState state, std::span<const int> selected,
                             const HardDecision& xhat_k, const Constellation& c,
                             IterationRecord record = {});

// Full feedback loop on one realization. The instance's constellation is
// used for detection and s_min.
DfeResult run_dfe(const SystemInstance& instance, const DfeConfig& cfg);

}  // namespace sparse_dfe

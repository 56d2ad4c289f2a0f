#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sparse_dfe/constellation.hpp"
#include "sparse_dfe/dfe.hpp"
#include "sparse_dfe/equalizers.hpp"
#include "sparse_dfe/system_model.hpp"

namespace sparse_dfe {

// One receiver chain in a sweep. With `feedback == false` the chain is the
// plain equalizer `dfe.equalizer` followed by detection.
struct NamedReceiver {
  std::string name;
  DfeConfig dfe;
  bool feedback = true;

  bool operator==(const NamedReceiver&) const = default;
};

struct SweepConfig {
  long m = 128;
  Modulation modulation = Modulation::QPSK;
  Spreading spreading = Spreading::DFT;
  std::vector<double> snr_db;
  std::vector<NamedReceiver> receivers;
  // Upper bound on trials per (receiver, snr) point.
  long trials_per_point = 20000;
  std::uint64_t master_seed = 1;
  // A point stops once it has this many bit errors and min_trials trials.
  long min_bit_errors = 100;
  long min_trials = 100;
  // Worker threads; results do not depend on this.
  int threads = 1;

  // Throws ConfigError/ShapeError before any trial runs.
  void validate() const;
  bool operator==(const SweepConfig&) const = default;
};

struct BerPoint {
  std::string config;
  double snr_db = 0.0;
  long trials = 0;
  long bits = 0;
  long bit_errors = 0;
  long symbols = 0;
  long symbol_errors = 0;
  double ber = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double mean_iters = 0.0;
  double median_iters = 0.0;
  double mean_fb0 = 0.0;
  long flagged_trials = 0;
  // Sum over trials of (bit errors in the block)^2.
  double block_error_sq_sum = 0.0;

  double ser() const noexcept;
  // Binomial standard errors of ber and ser.
  double ber_stderr() const noexcept;
  double ser_stderr() const noexcept;
  // Standard error of ber with the block as the sampling unit, which accounts
  // for errors clustering within a block.
  double ber_block_stderr() const noexcept;
};

struct BerReport {
  std::vector<BerPoint> points;

  const BerPoint* find(const std::string& config, double snr_db) const;
  // Header `config,snr_db,bits,bit_errors,ber,ci_lo,ci_hi,mean_iters,median_iters,mean_fb0`.
  std::string to_csv() const;
};

// Per-trial outcome of one receiver chain.
struct TrialOutcome {
  HardDecision decisions;
  int iterations = 0;
  int fed_back_first = 0;
  bool flagged = false;
};

TrialOutcome run_receiver(const SystemInstance& instance, const NamedReceiver& receiver);

using ProgressFn = std::function<void(const BerPoint&)>;

// Every trial draws its own channel, symbols and noise from a stream derived
// from (master_seed, receiver index, snr index, trial index), so the report
// is identical for any thread count.
BerReport run_sweep(const SweepConfig& cfg, const ProgressFn& progress = {});

// Exhaustive argmin ||y - A x||^2 over the alphabet^m; ties go to the
// lexicographically smallest symbol-index vector. Throws SearchSpaceError
// when |alphabet|^m exceeds max_candidates.
HardDecision ml_oracle(const SystemInstance& instance, std::uint64_t max_candidates = 1ULL << 20);

// Statistics of z_k = e_hat_k - e_k across trials that still had at least one
// wrong decision at iteration k.
struct Theorem1Config {
  long m = 128;
  double snr_db = 8.0;
  long trials = 100;
  std::uint64_t seed = 1;
  Modulation modulation = Modulation::QPSK;
  Spreading spreading = Spreading::DFT;
  EqualizerKind equalizer = EqualizerKind::MMSE;
  int iterations = 3;  // iterations 0 .. iterations-1 are analysed
  int threads = 1;
};

struct Theorem1Summary {
  int iteration = 0;
  long trials_used = 0;
  long samples = 0;                  // real samples (re and im pooled)
  double mean = 0.0;                 // mean of pooled real samples
  double empirical_variance = 0.0;   // mean |z_i|^2
  double predicted_variance = 0.0;   // mean ||e_k||^2 / m_k + sigma2
  double mean_error_energy = 0.0;    // mean ||e_k||^2
  double re_im_correlation = 0.0;    // circularity check
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
  // KS p-value after scaling by the empirical instead of the predicted
  // variance: a test of the shape alone.
  double ks_pvalue_shape = 1.0;
  bool empty = true;
};

struct QqRow {
  int iteration = 0;
  double sample_q = 0.0;
  double theory_q = 0.0;
};

struct Theorem1Report {
  std::vector<Theorem1Summary> summaries;
  std::vector<QqRow> qq;
  // Header `iteration,sample_q,theory_q`.
  std::string qq_csv() const;
};

Theorem1Report theorem1_samples(const Theorem1Config& cfg);

// First-iteration feedback behaviour of the adaptive rule, restricted to
// trials whose initial decisions have at most `max_true_errors` mistakes.
struct FeedbackScenarioConfig {
  long m = 128;
  double snr_db = 10.0;
  long trials = 200;
  long max_true_errors = 6;
  std::uint64_t seed = 1;
  Modulation modulation = Modulation::QPSK;
  Spreading spreading = Spreading::DFT;
  EqualizerKind equalizer = EqualizerKind::MMSE;
  long max_draws = 100000;
};

struct FeedbackScenarioReport {
  long trials = 0;
  double median_fed_back = 0.0;
  double wrong_inclusion_rate = 0.0;  // wrong symbols fed back / symbols fed back
  long wrong_fed_back = 0;
  long total_fed_back = 0;
  double median_threshold = 0.0;
  double median_rho = 0.0;
  double median_true_errors = 0.0;
};

FeedbackScenarioReport feedback_scenario(const FeedbackScenarioConfig& cfg);

// Linear interpolation of the SNR at which log10(BER) crosses target, using
// the points of `config` in increasing SNR order. Empty when never crossed.
std::optional<double> snr_at_ber(const BerReport& report, const std::string& config,
                                 double target);

}  // namespace sparse_dfe

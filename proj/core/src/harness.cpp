#include "sparse_dfe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "sparse_dfe/random.hpp"
#include "sparse_dfe/statistics.hpp"

namespace sparse_dfe {

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by any worker is rethrown on the caller's thread.
template <class Body>
void parallel_for(long n, int threads, Body&& body) {
  const long workers = std::max(1L, std::min<long>(threads, n));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (long w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

CVector linear_soft(const SystemInstance& inst, EqualizerKind kind, const SolverConfig& solver,
                    bool& flagged) {
  const Constellation& c = *inst.constellation;
  const bool square = inst.A.rows() == inst.A.cols() && inst.h.size() == inst.A.rows();
  if (kind != EqualizerKind::ConvexRelaxation && inst.unitary_spreading && square) {
    const double s2 = kind == EqualizerKind::MMSE ? inst.sigma2 : 0.0;
    try {
      return linear_equalize_diagonal(inst.h, inst.U, inst.y, s2);
    } catch (const SingularityError&) {
      flagged = true;
      return linear_equalize_diagonal(inst.h, inst.U, inst.y, std::max(inst.sigma2, 1e-10));
    }
  }
  try {
    SoftEstimate est = equalize(kind, inst.A, inst.y, inst.sigma2, c, solver);
    flagged = !est.converged;
    return std::move(est.values);
  } catch (const SingularityError&) {
    flagged = true;
    return ridge_ls(inst.A, inst.y, std::max(inst.sigma2, 1e-10));
  }
}

}  // namespace

double BerPoint::ser() const noexcept {
  return symbols > 0 ? static_cast<double>(symbol_errors) / static_cast<double>(symbols) : 0.0;
}

double BerPoint::ber_stderr() const noexcept {
  return bits > 0 ? std::sqrt(ber * (1.0 - ber) / static_cast<double>(bits)) : 0.0;
}

double BerPoint::ser_stderr() const noexcept {
  const double p = ser();
  return symbols > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(symbols)) : 0.0;
}

double BerPoint::ber_block_stderr() const noexcept {
  if (trials < 2 || bits == 0) return ber_stderr();
  const double n = static_cast<double>(trials);
  const double per_block = static_cast<double>(bits) / n;
  const double mean = static_cast<double>(bit_errors) / n;
  const double var = std::max(0.0, (block_error_sq_sum - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n) / per_block;
}

const BerPoint* BerReport::find(const std::string& config, double snr_db) const {
  for (const auto& p : points) {
    if (p.config == config && std::abs(p.snr_db - snr_db) < 1e-9) return &p;
  }
  return nullptr;
}

std::string BerReport::to_csv() const {
  std::string out = "config,snr_db,bits,bit_errors,ber,ci_lo,ci_hi,mean_iters,median_iters,mean_fb0\n";
  for (const auto& p : points) {
    out += csv_field(p.config);
    out += ',' + format_double("%.6g", p.snr_db);
    out += ',' + std::to_string(p.bits);
    out += ',' + std::to_string(p.bit_errors);
    out += ',' + format_double("%.9e", p.ber);
    out += ',' + format_double("%.9e", p.ci_lo);
    out += ',' + format_double("%.9e", p.ci_hi);
    out += ',' + format_double("%.6f", p.mean_iters);
    out += ',' + format_double("%.6f", p.median_iters);
    out += ',' + format_double("%.6f", p.mean_fb0);
    out += '\n';
  }
  return out;
}

void SweepConfig::validate() const {
  validate_spreading(spreading, m);
  if (snr_db.empty()) throw ConfigError("sweep needs at least one SNR point");
  if (receivers.empty()) throw ConfigError("sweep needs at least one receiver configuration");
  if (trials_per_point < 1) throw ConfigError("trials per point must be >= 1");
  if (min_trials < 1) throw ConfigError("min trials must be >= 1");
  if (min_bit_errors < 0) throw ConfigError("min bit errors must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  for (const auto& r : receivers) {
    if (r.name.empty()) throw ConfigError("receiver configurations need a name");
    r.dfe.validate();
  }
}

TrialOutcome run_receiver(const SystemInstance& instance, const NamedReceiver& receiver) {
  TrialOutcome out;
  if (receiver.feedback) {
    DfeResult res = run_dfe(instance, receiver.dfe);
    out.decisions = std::move(res.decisions);
    out.iterations = res.iterations;
    out.fed_back_first = res.trace.empty() ? 0 : res.trace.front().fed_back;
    out.flagged = res.flagged;
    return out;
  }
  bool flagged = false;
  const CVector soft = linear_soft(instance, receiver.dfe.equalizer, receiver.dfe.solver, flagged);
  out.decisions = detect(soft, *instance.constellation);
  out.flagged = flagged;
  return out;
}

BerReport run_sweep(const SweepConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const Constellation& c = Constellation::get(cfg.modulation);
  std::optional<CMatrix> fixed_u;
  if (!is_random(cfg.spreading)) {
    Rng unused(0);
    fixed_u = make_spreading(cfg.spreading, cfg.m, unused);
  }

  struct TrialStats {
    long bit_errors = 0;
    long symbol_errors = 0;
    int iterations = 0;
    int fed_back_first = 0;
    bool flagged = false;
  };

  const long chunk = 8L * cfg.threads;
  const long bits_per_block = cfg.m * c.bits_per_symbol();
  BerReport report;
  for (std::size_t ri = 0; ri < cfg.receivers.size(); ++ri) {
    const NamedReceiver& receiver = cfg.receivers[ri];
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
      const double sigma2 = snr_to_sigma2(cfg.snr_db[si]);
      BerPoint point;
      point.config = receiver.name;
      point.snr_db = cfg.snr_db[si];
      std::vector<double> iterations;
      double fb0_sum = 0.0;
      double iter_sum = 0.0;
      bool stop = false;
      long done = 0;
      std::vector<TrialStats> batch;
      while (!stop && done < cfg.trials_per_point) {
        const long n = std::min(chunk, cfg.trials_per_point - done);
        batch.assign(static_cast<std::size_t>(n), TrialStats{});
        parallel_for(n, cfg.threads, [&](long i) {
          const auto trial = static_cast<std::uint64_t>(done + i);
          Rng rng = make_stream(cfg.master_seed, {ri, si, trial});
          const SystemInstance inst = draw_instance(cfg.spreading, cfg.m, c, sigma2, rng,
                                                    fixed_u ? &*fixed_u : nullptr);
          const TrialOutcome o = run_receiver(inst, receiver);
          TrialStats& s = batch[static_cast<std::size_t>(i)];
          s.bit_errors = count_bit_errors(o.decisions, inst.symbols, c);
          s.symbol_errors = count_symbol_errors(o.decisions, inst.symbols);
          s.iterations = o.iterations;
          s.fed_back_first = o.fed_back_first;
          s.flagged = o.flagged;
        });
        for (const TrialStats& s : batch) {
          ++point.trials;
          point.bits += bits_per_block;
          point.bit_errors += s.bit_errors;
          point.block_error_sq_sum += static_cast<double>(s.bit_errors) * static_cast<double>(s.bit_errors);
          point.symbols += cfg.m;
          point.symbol_errors += s.symbol_errors;
          point.flagged_trials += s.flagged ? 1 : 0;
          iterations.push_back(s.iterations);
          iter_sum += s.iterations;
          fb0_sum += s.fed_back_first;
          if (point.trials >= cfg.min_trials && point.bit_errors >= cfg.min_bit_errors) {
            stop = true;
            break;
          }
        }
        done += n;
      }
      point.ber = static_cast<double>(point.bit_errors) / static_cast<double>(point.bits);
      std::tie(point.ci_lo, point.ci_hi) = stats::wilson_interval(point.bit_errors, point.bits);
      point.mean_iters = iter_sum / static_cast<double>(point.trials);
      point.median_iters = stats::median(std::move(iterations));
      point.mean_fb0 = fb0_sum / static_cast<double>(point.trials);
      if (progress) progress(point);
      report.points.push_back(std::move(point));
    }
  }
  return report;
}

HardDecision ml_oracle(const SystemInstance& instance, std::uint64_t max_candidates) {
  if (instance.constellation == nullptr) throw ConfigError("ml_oracle: instance has no constellation");
  const Constellation& c = *instance.constellation;
  const CMatrix& A = instance.A;
  const auto m = A.cols();
  const auto alphabet = static_cast<std::uint64_t>(c.size());
  std::uint64_t space = 1;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (space > max_candidates / alphabet) {
      throw SearchSpaceError("ml_oracle: " + std::to_string(c.size()) + "^" + std::to_string(m) +
                             " candidates exceed the limit of " + std::to_string(max_candidates));
    }
    space *= alphabet;
  }

  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  const auto exact_residual = [&] {
    return CVector(instance.y - A * c.values(idx));
  };
  CVector r = exact_residual();
  double best = r.squaredNorm();
  std::vector<int> best_idx = idx;
  for (std::uint64_t n = 1; n < space; ++n) {
    // Odometer step, last position fastest: lexicographic order.
    Eigen::Index pos = m - 1;
    while (true) {
      const auto sp = static_cast<std::size_t>(pos);
      const int old = idx[sp];
      idx[sp] = (old + 1) % c.size();
      r -= A.col(pos) * (c.point(idx[sp]) - c.point(old));
      if (idx[sp] != 0) break;
      --pos;
    }
    if (pos < m - 1) r = exact_residual();
    const double f = r.squaredNorm();
    if (f < best) {
      best = f;
      best_idx = idx;
    }
  }
  return HardDecision{std::move(best_idx)};
}

std::string Theorem1Report::qq_csv() const {
  std::string out = "iteration,sample_q,theory_q\n";
  for (const auto& row : qq) {
    out += std::to_string(row.iteration);
    out += ',' + format_double("%.9e", row.sample_q);
    out += ',' + format_double("%.9e", row.theory_q);
    out += '\n';
  }
  return out;
}

Theorem1Report theorem1_samples(const Theorem1Config& cfg) {
  if (cfg.trials < 1) throw ConfigError("theorem1: trials must be >= 1");
  if (cfg.iterations < 1) throw ConfigError("theorem1: iterations must be >= 1");
  validate_spreading(cfg.spreading, cfg.m);
  const Constellation& c = Constellation::get(cfg.modulation);
  const double sigma2 = snr_to_sigma2(cfg.snr_db);
  std::optional<CMatrix> fixed_u;
  if (!is_random(cfg.spreading)) {
    Rng unused(0);
    fixed_u = make_spreading(cfg.spreading, cfg.m, unused);
  }

  struct IterationSample {
    bool used = false;
    CVector z;
    double error_energy = 0.0;
    long m_k = 0;
  };
  const auto iters = static_cast<std::size_t>(cfg.iterations);
  std::vector<std::vector<IterationSample>> per_trial(static_cast<std::size_t>(cfg.trials),
                                                      std::vector<IterationSample>(iters));

  DfeConfig dfe;
  dfe.equalizer = cfg.equalizer;
  dfe.keep_snapshots = true;
  dfe.max_outer_iters = cfg.iterations;

  parallel_for(cfg.trials, cfg.threads, [&](long t) {
    Rng rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(t)});
    const SystemInstance inst = draw_instance(cfg.spreading, cfg.m, c, sigma2, rng,
                                              fixed_u ? &*fixed_u : nullptr);
    const DfeResult res = run_dfe(inst, dfe);
    for (const auto& rec : res.trace) {
      const auto k = static_cast<std::size_t>(rec.iteration);
      if (k >= iters || !rec.snapshot) continue;
      const IterationSnapshot& snap = *rec.snapshot;
      const auto n = static_cast<Eigen::Index>(snap.active.size());
      CVector e(n);
      bool any_error = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        const int truth = inst.symbols.symbols[static_cast<std::size_t>(snap.active[si])];
        e[i] = c.point(truth) - c.point(snap.detected[si]);
        any_error = any_error || truth != snap.detected[si];
      }
      if (!any_error) continue;
      IterationSample& s = per_trial[static_cast<std::size_t>(t)][k];
      s.used = true;
      s.z = snap.e_hat - e;
      s.error_energy = e.squaredNorm();
      s.m_k = static_cast<long>(n);
    }
  });

  Theorem1Report report;
  for (std::size_t k = 0; k < iters; ++k) {
    Theorem1Summary sum;
    sum.iteration = static_cast<int>(k);
    double energy = 0.0;
    double energy_per_unknown = 0.0;
    std::vector<cplx> pooled;
    for (const auto& trial : per_trial) {
      const IterationSample& s = trial[k];
      if (!s.used) continue;
      ++sum.trials_used;
      energy += s.error_energy;
      energy_per_unknown += s.error_energy / static_cast<double>(s.m_k);
      for (Eigen::Index i = 0; i < s.z.size(); ++i) pooled.push_back(s.z[i]);
    }
    if (sum.trials_used == 0) {
      report.summaries.push_back(sum);
      continue;
    }
    sum.empty = false;
    const double used = static_cast<double>(sum.trials_used);
    sum.mean_error_energy = energy / used;
    sum.predicted_variance = energy_per_unknown / used + sigma2;

    double re_sum = 0.0, im_sum = 0.0, power = 0.0;
    for (const cplx& z : pooled) {
      re_sum += z.real();
      im_sum += z.imag();
      power += std::norm(z);
    }
    const double count = static_cast<double>(pooled.size());
    sum.empirical_variance = power / count;
    sum.mean = (re_sum + im_sum) / (2.0 * count);
    const double re_mean = re_sum / count;
    const double im_mean = im_sum / count;
    double cov = 0.0, var_re = 0.0, var_im = 0.0;
    for (const cplx& z : pooled) {
      cov += (z.real() - re_mean) * (z.imag() - im_mean);
      var_re += (z.real() - re_mean) * (z.real() - re_mean);
      var_im += (z.imag() - im_mean) * (z.imag() - im_mean);
    }
    sum.re_im_correlation = cov / std::sqrt(std::max(var_re * var_im, 1e-300));

    const double scale = std::sqrt(sum.predicted_variance / 2.0);
    std::vector<double> standardized;
    standardized.reserve(2 * pooled.size());
    for (const cplx& z : pooled) {
      standardized.push_back(z.real() / scale);
      standardized.push_back(z.imag() / scale);
    }
    sum.samples = static_cast<long>(standardized.size());
    sum.ks_statistic = stats::ks_statistic_normal(standardized);
    sum.ks_pvalue = stats::ks_pvalue(sum.ks_statistic, sum.samples);
    {
      const double rescale = std::sqrt(sum.predicted_variance / sum.empirical_variance);
      std::vector<double> shape(standardized);
      for (double& v : shape) v *= rescale;
      sum.ks_pvalue_shape = stats::ks_pvalue(stats::ks_statistic_normal(shape), sum.samples);
    }

    std::sort(standardized.begin(), standardized.end());
    const double n = static_cast<double>(standardized.size());
    for (std::size_t i = 0; i < standardized.size(); ++i) {
      report.qq.push_back({static_cast<int>(k), standardized[i],
                           stats::normal_quantile((static_cast<double>(i) + 0.5) / n)});
    }
    report.summaries.push_back(sum);
  }
  return report;
}

FeedbackScenarioReport feedback_scenario(const FeedbackScenarioConfig& cfg) {
  validate_spreading(cfg.spreading, cfg.m);
  const Constellation& c = Constellation::get(cfg.modulation);
  const double sigma2 = snr_to_sigma2(cfg.snr_db);
  std::optional<CMatrix> fixed_u;
  if (!is_random(cfg.spreading)) {
    Rng unused(0);
    fixed_u = make_spreading(cfg.spreading, cfg.m, unused);
  }
  DfeConfig dfe;
  dfe.equalizer = cfg.equalizer;
  dfe.keep_snapshots = true;
  dfe.max_outer_iters = 1;

  FeedbackScenarioReport rep;
  std::vector<double> fed, thresholds, rhos, errors;
  for (long d = 0; d < cfg.max_draws && rep.trials < cfg.trials; ++d) {
    Rng rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(d)});
    const SystemInstance inst = draw_instance(cfg.spreading, cfg.m, c, sigma2, rng,
                                              fixed_u ? &*fixed_u : nullptr);
    const DfeResult res = run_dfe(inst, dfe);
    const IterationRecord& rec = res.trace.front();
    const IterationSnapshot& snap = *rec.snapshot;
    long true_errors = 0;
    for (std::size_t i = 0; i < snap.active.size(); ++i) {
      true_errors += snap.detected[i] != inst.symbols.symbols[static_cast<std::size_t>(snap.active[i])];
    }
    if (true_errors > cfg.max_true_errors) continue;
    ++rep.trials;
    for (int pos : snap.selected) {
      // Iteration 0 has active == identity, so positions index detected.
      const auto p = static_cast<std::size_t>(pos);
      rep.wrong_fed_back += snap.detected[p] != inst.symbols.symbols[p];
    }
    rep.total_fed_back += static_cast<long>(snap.selected.size());
    fed.push_back(static_cast<double>(snap.selected.size()));
    thresholds.push_back(rec.threshold);
    rhos.push_back(rec.rho);
    errors.push_back(static_cast<double>(true_errors));
  }
  rep.median_fed_back = stats::median(fed);
  rep.median_threshold = stats::median(thresholds);
  rep.median_rho = stats::median(rhos);
  rep.median_true_errors = stats::median(errors);
  rep.wrong_inclusion_rate = rep.total_fed_back > 0
                                 ? static_cast<double>(rep.wrong_fed_back) /
                                       static_cast<double>(rep.total_fed_back)
                                 : 0.0;
  return rep;
}

std::optional<double> snr_at_ber(const BerReport& report, const std::string& config,
                                 double target) {
  std::vector<const BerPoint*> pts;
  for (const auto& p : report.points) {
    if (p.config == config) pts.push_back(&p);
  }
  std::sort(pts.begin(), pts.end(),
            [](const BerPoint* a, const BerPoint* b) { return a->snr_db < b->snr_db; });
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double b0 = pts[i]->ber;
    const double b1 = pts[i + 1]->ber;
    if (b0 >= target && b1 < target) {
      if (b1 <= 0.0) return pts[i + 1]->snr_db;
      const double l0 = std::log10(b0), l1 = std::log10(b1), lt = std::log10(target);
      const double frac = (l0 - lt) / (l0 - l1);
      return pts[i]->snr_db + frac * (pts[i + 1]->snr_db - pts[i]->snr_db);
    }
  }
  return std::nullopt;
}

}  // namespace sparse_dfe

#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sparse_dfe/random.hpp"

namespace sparse_dfe::cli {

namespace fs = std::filesystem;

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Sweep: return "sweep";
    case Command::Trace: return "trace";
    case Command::Theorem1: return "theorem1";
    case Command::Preset: return "preset";
    case Command::SelfTest: return "selftest";
  }
  return "?";
}

std::string_view to_string(CliErrorKind k) {
  switch (k) {
    case CliErrorKind::UnknownFlag: return "unknown flag";
    case CliErrorKind::InvalidToken: return "invalid token";
    case CliErrorKind::InvalidValue: return "invalid value";
    case CliErrorKind::Configuration: return "configuration error";
    case CliErrorKind::MissingCommand: return "missing command";
  }
  return "?";
}

CliError::CliError(CliErrorKind kind, std::string flag, const std::string& message)
    : ConfigError(std::string(to_string(kind)) + (flag.empty() ? "" : " (" + flag + ")") + ": " +
                  message),
      kind_(kind),
      flag_(std::move(flag)) {}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Shortest representation that still round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

double parse_double(const std::string& flag, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw CliError(CliErrorKind::InvalidValue, flag, "'" + s + "' is not a finite number");
  }
  return v;
}

template <class Int>
Int parse_int(const std::string& flag, const std::string& s, Int min_value) {
  Int v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw CliError(CliErrorKind::InvalidValue, flag, "'" + s + "' is not an integer");
  }
  if (v < min_value) {
    throw CliError(CliErrorKind::InvalidValue, flag,
                   "must be >= " + std::to_string(min_value) + ", got " + s);
  }
  return v;
}

// "a:step:b" (inclusive) or a comma-separated list.
std::vector<double> parse_snr_list(const std::string& s) {
  const std::string flag = "--snr-db";
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw CliError(CliErrorKind::InvalidValue, flag, "range must be start:step:stop");
    const double a = parse_double(flag, parts[0]);
    const double step = parse_double(flag, parts[1]);
    const double b = parse_double(flag, parts[2]);
    if (!(step > 0.0) || b < a) throw CliError(CliErrorKind::InvalidValue, flag, "empty or descending range");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    if (n > 10000) throw CliError(CliErrorKind::InvalidValue, flag, "too many SNR points");
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(parse_double(flag, part));
  }
  if (out.empty()) throw CliError(CliErrorKind::InvalidValue, flag, "no SNR values");
  return out;
}

template <class F>
auto token(const std::string& flag, const std::string& value, F&& parse) {
  try {
    return parse(value);
  } catch (const ConfigError& e) {
    throw CliError(CliErrorKind::InvalidToken, flag, e.what());
  }
}

// Raw flag values; everything is parsed by hand so errors name the flag.
struct RawFlags {
  std::string block_len, constellation, spreading, equalizer, dfe, error_est, snr_db, trials,
      min_errors, seed, out, threads, solver_max_iters, solver_tol, l1_bound_scale,
      threshold_norm, iterations;
  bool strict = false;
};

void add_flags(CLI::App& app, RawFlags& f) {
  app.add_option("--block-len", f.block_len, "block length m (default 128)");
  app.add_option("--constellation", f.constellation, "bpsk | qpsk | qam16 (default qpsk)");
  app.add_option("--spreading", f.spreading, "dft | hadamard | haar | gaussian (default dft)");
  app.add_option("--equalizer", f.equalizer, "zf | mmse | convex (default mmse)");
  app.add_option("--dfe", f.dfe, "adaptive | logm | feedback-one | off (default adaptive)");
  app.add_option("--error-est", f.error_est, "mf | l1 (default mf)");
  app.add_option("--snr-db", f.snr_db, "SNR list: start:step:stop or a,b,c (default 0:2:16)");
  app.add_option("--trials", f.trials, "trial cap per point");
  app.add_option("--min-errors", f.min_errors, "bit errors that end a point early (default 100)");
  app.add_option("--seed", f.seed, "master seed (default 1)");
  app.add_option("--out", f.out, "output directory (default out)");
  app.add_flag("--strict", f.strict, "exit nonzero on flagged solver fallbacks");
  app.add_option("--threads", f.threads, "worker threads (env SPARSE_DFE_THREADS)");
  app.add_option("--solver-max-iters", f.solver_max_iters, "iteration cap of iterative solvers");
  app.add_option("--solver-tol", f.solver_tol, "relative tolerance of iterative solvers");
  app.add_option("--l1-bound-scale", f.l1_bound_scale, "scale of the l1 residual ball");
  app.add_option("--threshold-norm", f.threshold_norm, "active | block (debug)");
  app.add_option("--iterations", f.iterations, "theorem1: iterations analysed (default 3)");
}

std::string extras_flag(const std::vector<std::string>& extras) {
  return extras.empty() ? std::string() : extras.front();
}

const std::vector<std::string> kPresets = {"fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12"};

}  // namespace

const std::vector<std::string>& preset_names() { return kPresets; }

Options parse_args(const std::vector<std::string>& args, std::optional<std::string> env_threads) {
  CLI::App app{"sparse_dfe", "sparse_dfe"};
  app.allow_extras(false);
  app.require_subcommand(1, 1);
  RawFlags f;
  std::string preset;
  CLI::App* sweep = app.add_subcommand("sweep", "BER versus SNR sweep of one receiver");
  CLI::App* trace = app.add_subcommand("trace", "per-iteration trace of one seeded instance");
  CLI::App* th1 = app.add_subcommand("theorem1", "error-estimate normality statistics");
  CLI::App* pre = app.add_subcommand("preset", "figure reproduction preset");
  CLI::App* self = app.add_subcommand("selftest", "oracle and invariant checks");
  for (CLI::App* sub : {sweep, trace, th1, pre, self}) add_flags(*sub, f);
  pre->add_option("figure", preset, "fig6 .. fig12")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ExtrasError& e) {
    std::vector<std::string> rest = app.remaining();
    for (CLI::App* sub : app.get_subcommands()) {
      for (const auto& r : sub->remaining()) rest.push_back(r);
    }
    throw CliError(CliErrorKind::UnknownFlag, extras_flag(rest), e.what());
  } catch (const CLI::RequiredError& e) {
    if (app.get_subcommands().empty()) {
      throw CliError(CliErrorKind::MissingCommand, "",
                     "expected one of sweep | trace | theorem1 | preset | selftest");
    }
    throw CliError(CliErrorKind::Configuration, "figure", e.what());
  } catch (const CLI::ParseError& e) {
    if (app.get_subcommands().empty()) {
      throw CliError(CliErrorKind::MissingCommand, args.empty() ? "" : args.front(),
                     "expected one of sweep | trace | theorem1 | preset | selftest");
    }
    throw CliError(CliErrorKind::InvalidValue, "", e.what());
  }

  Options o;
  if (sweep->parsed()) o.command = Command::Sweep;
  if (trace->parsed()) o.command = Command::Trace;
  if (th1->parsed()) o.command = Command::Theorem1;
  if (self->parsed()) o.command = Command::SelfTest;
  if (pre->parsed()) {
    o.command = Command::Preset;
    if (std::find(kPresets.begin(), kPresets.end(), preset) == kPresets.end()) {
      throw CliError(CliErrorKind::InvalidToken, "preset",
                     "unknown figure '" + preset + "' (expected fig6 .. fig12)");
    }
    o.preset = preset;
  }

  if (!f.block_len.empty()) o.m = parse_int<long>("--block-len", f.block_len, 1);
  if (!f.constellation.empty()) o.modulation = token("--constellation", f.constellation, parse_modulation);
  if (!f.spreading.empty()) o.spreading = token("--spreading", f.spreading, parse_spreading);
  if (!f.equalizer.empty()) o.equalizer = token("--equalizer", f.equalizer, parse_equalizer);
  if (!f.dfe.empty()) {
    if (f.dfe == "off") {
      o.feedback = false;
    } else {
      o.rule = token("--dfe", f.dfe, parse_threshold_rule);
    }
  }
  if (!f.error_est.empty()) o.error_estimator = token("--error-est", f.error_est, parse_error_estimator);
  if (!f.threshold_norm.empty()) {
    if (f.threshold_norm == "active") {
      o.normalization = ThresholdNormalization::ActiveUnknowns;
    } else if (f.threshold_norm == "block") {
      o.normalization = ThresholdNormalization::BlockLength;
    } else {
      throw CliError(CliErrorKind::InvalidToken, "--threshold-norm",
                     "unknown normalization '" + f.threshold_norm + "' (expected active|block)");
    }
  }
  if (!f.snr_db.empty()) o.snr_db = parse_snr_list(f.snr_db);
  if (!f.trials.empty()) o.trials = parse_int<long>("--trials", f.trials, 1);
  if (!f.min_errors.empty()) o.min_errors = parse_int<long>("--min-errors", f.min_errors, 0);
  if (!f.seed.empty()) o.seed = parse_int<std::uint64_t>("--seed", f.seed, 0);
  if (!f.out.empty()) o.out = f.out;
  o.strict = f.strict;
  if (!f.threads.empty()) {
    o.threads = parse_int<int>("--threads", f.threads, 1);
  } else if (env_threads && !env_threads->empty()) {
    o.threads = parse_int<int>("SPARSE_DFE_THREADS", *env_threads, 1);
  }
  if (!f.solver_max_iters.empty()) o.solver.max_iters = parse_int<int>("--solver-max-iters", f.solver_max_iters, 1);
  if (!f.solver_tol.empty()) {
    o.solver.tol = parse_double("--solver-tol", f.solver_tol);
    if (!(o.solver.tol > 0.0)) throw CliError(CliErrorKind::InvalidValue, "--solver-tol", "must be > 0");
  }
  if (!f.l1_bound_scale.empty()) {
    o.solver.l1_bound_scale = parse_double("--l1-bound-scale", f.l1_bound_scale);
    if (!(o.solver.l1_bound_scale > 0.0)) {
      throw CliError(CliErrorKind::InvalidValue, "--l1-bound-scale", "must be > 0");
    }
  }
  if (!f.iterations.empty()) o.iterations = parse_int<int>("--iterations", f.iterations, 1);

  if (o.command != Command::Preset) {
    try {
      validate_spreading(o.spreading, o.m);
    } catch (const ConfigError& e) {
      throw CliError(CliErrorKind::Configuration, "--spreading", e.what());
    } catch (const ShapeError& e) {
      throw CliError(CliErrorKind::Configuration, "--block-len", e.what());
    }
  }
  return o;
}

std::string effective_config(const Options& o) {
  std::string s(to_string(o.command));
  if (o.command == Command::Preset) s += " " + o.preset;
  s += " --block-len " + std::to_string(o.m);
  s += " --constellation " + std::string(to_string(o.modulation));
  s += " --spreading " + std::string(to_string(o.spreading));
  s += " --equalizer " + std::string(to_string(o.equalizer));
  s += " --dfe " + (o.feedback ? std::string(to_string(o.rule)) : std::string("off"));
  s += " --error-est " + std::string(to_string(o.error_estimator));
  if (o.snr_db) {
    s += " --snr-db ";
    for (std::size_t i = 0; i < o.snr_db->size(); ++i) s += (i ? "," : "") + fmt((*o.snr_db)[i]);
  }
  if (o.trials) s += " --trials " + std::to_string(*o.trials);
  s += " --min-errors " + std::to_string(o.min_errors);
  s += " --seed " + std::to_string(o.seed);
  s += " --out " + o.out;
  if (o.strict) s += " --strict";
  s += " --threads " + std::to_string(o.threads);
  s += " --solver-max-iters " + std::to_string(o.solver.max_iters);
  s += " --solver-tol " + fmt(o.solver.tol);
  s += " --l1-bound-scale " + fmt(o.solver.l1_bound_scale);
  s += " --threshold-norm ";
  s += o.normalization == ThresholdNormalization::ActiveUnknowns ? "active" : "block";
  s += " --iterations " + std::to_string(o.iterations);
  return s;
}

std::vector<double> effective_snr_db(const Options& o) {
  if (o.snr_db) return *o.snr_db;
  switch (o.command) {
    case Command::Trace: return {10.0};
    case Command::Theorem1: return {8.0};
    default: return {0, 2, 4, 6, 8, 10, 12, 14, 16};
  }
}

namespace {

DfeConfig base_dfe(const Options& o) {
  DfeConfig d;
  d.solver = o.solver;
  d.normalization = o.normalization;
  return d;
}

NamedReceiver receiver(const Options& o, std::string name, EqualizerKind eq, bool feedback,
                       ThresholdRule rule = ThresholdRule::Adaptive,
                       ErrorEstimator est = ErrorEstimator::MatchedFilter) {
  NamedReceiver r;
  r.name = std::move(name);
  r.dfe = base_dfe(o);
  r.dfe.equalizer = eq;
  r.dfe.threshold_rule = rule;
  r.dfe.error_estimator = est;
  r.feedback = feedback;
  return r;
}

std::string receiver_name(const Options& o) {
  std::string n(to_string(o.equalizer));
  if (!o.feedback) return n;
  n += "+" + std::string(to_string(o.rule));
  if (o.error_estimator == ErrorEstimator::L1) n += "+l1";
  return n;
}

SweepConfig sweep_base(const Options& o, long m, Modulation mod, Spreading sp,
                       std::vector<double> snr) {
  SweepConfig c;
  c.m = m;
  c.modulation = mod;
  c.spreading = sp;
  c.snr_db = o.snr_db ? *o.snr_db : std::move(snr);
  c.trials_per_point = o.trials.value_or(20000);
  c.master_seed = o.seed;
  c.min_bit_errors = o.min_errors;
  c.threads = o.threads;
  return c;
}

std::vector<double> snr_range(double a, double step, double b) {
  std::vector<double> v;
  for (double s = a; s <= b + 1e-9; s += step) v.push_back(s);
  return v;
}

}  // namespace

SweepConfig to_sweep_config(const Options& o) {
  SweepConfig c = sweep_base(o, o.m, o.modulation, o.spreading, effective_snr_db(o));
  NamedReceiver r = receiver(o, receiver_name(o), o.equalizer, o.feedback, o.rule, o.error_estimator);
  c.receivers.push_back(std::move(r));
  return c;
}

Theorem1Config to_theorem1_config(const Options& o) {
  Theorem1Config c;
  c.m = o.m;
  c.snr_db = effective_snr_db(o).front();
  c.trials = o.trials.value_or(200);
  c.seed = o.seed;
  c.modulation = o.modulation;
  c.spreading = o.spreading;
  c.equalizer = o.equalizer;
  c.iterations = o.iterations;
  c.threads = o.threads;
  return c;
}

std::vector<SweepConfig> preset_sweeps(const Options& o) {
  using EK = EqualizerKind;
  const auto mmse = [&] { return receiver(o, "MMSE", EK::MMSE, false); };
  const auto inf = [&] { return receiver(o, "inf", EK::ConvexRelaxation, false); };
  const auto mmse_thresh = [&] { return receiver(o, "MMSE+thresh", EK::MMSE, true); };
  const auto inf_thresh = [&] { return receiver(o, "inf+thresh", EK::ConvexRelaxation, true); };
  const auto l1_thresh = [&] {
    return receiver(o, "l1+thresh", EK::MMSE, true, ThresholdRule::Adaptive, ErrorEstimator::L1);
  };
  const auto feedback_one = [&] {
    return receiver(o, "feedback-one", EK::MMSE, true, ThresholdRule::FeedbackOne);
  };
  const std::string& p = o.preset;
  std::vector<SweepConfig> out;
  if (p == "fig6") {
    // m = 128 QPSK with DFT spreading and all six receivers of the comparison.
    // The range runs past 14 dB so the MMSE curve reaches BER 1e-3.
    SweepConfig c = sweep_base(o, 128, Modulation::QPSK, Spreading::DFT, snr_range(0, 2, 18));
    c.receivers = {mmse(), inf(), mmse_thresh(), inf_thresh(), l1_thresh(), feedback_one()};
    out.push_back(std::move(c));
  } else if (p == "fig7" || p == "fig8") {
    // Same comparison with Hadamard (fig7) or Haar (fig8) spreading.
    const Spreading sp = p == "fig7" ? Spreading::Hadamard : Spreading::Haar;
    SweepConfig c = sweep_base(o, 128, Modulation::QPSK, sp, snr_range(0, 2, 18));
    c.receivers = {mmse(), inf(), mmse_thresh(), inf_thresh(), feedback_one()};
    out.push_back(std::move(c));
  } else if (p == "fig9") {
    // Block length 128 against 1024, DFT spreading.
    for (long m : {128L, 1024L}) {
      SweepConfig c = sweep_base(o, m, Modulation::QPSK, Spreading::DFT, snr_range(0, 2, 16));
      NamedReceiver a = mmse();
      NamedReceiver b = mmse_thresh();
      a.name += " m=" + std::to_string(m);
      b.name += " m=" + std::to_string(m);
      c.receivers = {a, b};
      out.push_back(std::move(c));
    }
  } else if (p == "fig10") {
    // Sparsity-penalised threshold against the plain log m threshold.
    SweepConfig c = sweep_base(o, 128, Modulation::QPSK, Spreading::DFT, snr_range(0, 2, 16));
    c.receivers = {mmse_thresh(), receiver(o, "MMSE+logm", EK::MMSE, true, ThresholdRule::LogMOnly)};
    out.push_back(std::move(c));
  } else if (p == "fig11") {
    // 16-QAM; long at high SNR because of the convex initial solution.
    SweepConfig c = sweep_base(o, 128, Modulation::QAM16, Spreading::DFT, snr_range(0, 3, 24));
    c.receivers = {mmse(), inf(), mmse_thresh(), inf_thresh()};
    out.push_back(std::move(c));
  } else if (p == "fig12") {
    // CDMA: Gaussian spreading with H = I.
    SweepConfig c = sweep_base(o, 128, Modulation::QPSK, Spreading::Gaussian, snr_range(0, 2, 16));
    c.receivers = {mmse(), inf(), mmse_thresh(), inf_thresh(), feedback_one()};
    out.push_back(std::move(c));
  } else {
    throw CliError(CliErrorKind::InvalidToken, "preset", "unknown figure '" + p + "'");
  }
  return out;
}

namespace {

bool check(std::ostream& out, const std::string& name, bool ok) {
  out << (ok ? "PASS " : "FAIL ") << name << '\n';
  return ok;
}

}  // namespace

bool self_test(std::ostream& out) {
  bool all = true;

  {
    bool ok = true;
    for (Modulation mod : {Modulation::BPSK, Modulation::QPSK, Modulation::QAM16}) {
      const Constellation& c = Constellation::get(mod);
      for (Spreading sp : {Spreading::DFT, Spreading::Hadamard, Spreading::Haar}) {
        Rng rng = make_stream(7, {static_cast<std::uint64_t>(mod), static_cast<std::uint64_t>(sp)});
        const SystemInstance inst = draw_instance(sp, 16, c, 0.0, rng);
        for (ThresholdRule rule :
             {ThresholdRule::Adaptive, ThresholdRule::LogMOnly, ThresholdRule::FeedbackOne}) {
          DfeConfig cfg;
          cfg.threshold_rule = rule;
          ok = ok && run_dfe(inst, cfg).decisions == inst.symbols;
        }
      }
    }
    all &= check(out, "noiseless feedback loop recovers the transmitted block", ok);
  }

  {
    const Constellation& c = Constellation::get(Modulation::QPSK);
    Rng rng = make_stream(11, {0});
    const SystemInstance inst = draw_instance(Spreading::Haar, 5, c, 0.0, rng);
    all &= check(out, "exhaustive ML search returns the noiseless block",
                 ml_oracle(inst) == inst.symbols);
  }

  {
    const Constellation& c = Constellation::get(Modulation::QPSK);
    Rng rng = make_stream(13, {0});
    const SystemInstance inst = draw_instance(Spreading::DFT, 32, c, 0.1, rng);
    const CVector a = ridge_ls(inst.A, inst.y, inst.sigma2);
    const CVector b = linear_equalize_diagonal(inst.h, inst.U, inst.y, inst.sigma2);
    all &= check(out, "MMSE matches its unitary closed form", (a - b).norm() <= 1e-9 * b.norm());
  }

  {
    const Constellation& c = Constellation::get(Modulation::QPSK);
    Rng rng = make_stream(17, {0});
    const SystemInstance inst = draw_instance(Spreading::Haar, 24, c, 0.3, rng);
    SolverConfig cfg;
    cfg.record_objective = true;
    const SolveResult r = box_ls(inst.A, inst.y, c.box_bound(), cfg);
    bool ok = true;
    for (Eigen::Index i = 0; i < r.x.size(); ++i) {
      ok = ok && std::abs(r.x[i].real()) <= c.box_bound() && std::abs(r.x[i].imag()) <= c.box_bound();
    }
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      ok = ok && r.objective[i] <= r.objective[i - 1] * (1 + 1e-12) + 1e-15;
    }
    all &= check(out, "box solver is feasible and monotone", ok);
  }

  {
    SweepConfig cfg;
    cfg.m = 16;
    cfg.snr_db = {4.0};
    cfg.trials_per_point = 40;
    cfg.min_trials = 10;
    cfg.min_bit_errors = 20;
    NamedReceiver r;
    r.name = "MMSE+thresh";
    cfg.receivers = {r};
    const std::string one = run_sweep(cfg).to_csv();
    cfg.threads = 3;
    all &= check(out, "sweep output is independent of the thread count", one == run_sweep(cfg).to_csv());
  }
  return all;
}

namespace {

void ensure_writable(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  const fs::path probe = fs::path(dir) / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  const fs::path path = fs::path(dir) / name;
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) throw IoError("failed to write " + path.string());
}

std::string summary_line(const BerPoint& p) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-14s snr=%5.1f dB  ber=%.3e [%.3e, %.3e]  errors=%ld/%ld  trials=%ld  "
                "iters=%.2f (median %.1f)  fb0=%.1f%s",
                p.config.c_str(), p.snr_db, p.ber, p.ci_lo, p.ci_hi, p.bit_errors, p.bits, p.trials,
                p.mean_iters, p.median_iters, p.mean_fb0,
                p.flagged_trials > 0 ? ("  flagged=" + std::to_string(p.flagged_trials)).c_str() : "");
  return buf;
}

int run_sweeps(const std::vector<SweepConfig>& sweeps, const Options& o, std::ostream& out) {
  for (const auto& s : sweeps) s.validate();
  ensure_writable(o.out);
  BerReport all;
  long flagged = 0;
  for (const auto& s : sweeps) {
    BerReport r = run_sweep(s, [&](const BerPoint& p) { out << summary_line(p) << std::endl; });
    for (auto& p : r.points) {
      flagged += p.flagged_trials;
      all.points.push_back(std::move(p));
    }
  }
  write_file(o.out, "ber.csv", all.to_csv());
  return o.strict && flagged > 0 ? 1 : 0;
}

int run_trace(const Options& o, std::ostream& out) {
  ensure_writable(o.out);
  const Constellation& c = Constellation::get(o.modulation);
  const double snr = effective_snr_db(o).front();
  Rng rng = make_stream(o.seed, {0});
  const SystemInstance inst = draw_instance(o.spreading, o.m, c, snr_to_sigma2(snr), rng);
  DfeConfig cfg = base_dfe(o);
  cfg.equalizer = o.equalizer;
  cfg.threshold_rule = o.rule;
  cfg.error_estimator = o.error_estimator;
  const DfeResult res = run_dfe(inst, cfg);

  std::string csv = "iteration,active,threshold,rho,residual_norm,fed_back,fallback\n";
  out << "iter  active   t_k          rho_k        ||r_k||      fed_back\n";
  for (const auto& rec : res.trace) {
    char line[160];
    std::snprintf(line, sizeof line, "%4d  %6d   %.5e  %.5e  %.5e  %d%s\n", rec.iteration,
                  rec.active_before, rec.threshold, rec.rho, rec.residual_norm, rec.fed_back,
                  rec.solver_fallback || rec.estimator_flag ? "  (flagged)" : "");
    out << line;
    std::snprintf(line, sizeof line, "%d,%d,%.9e,%.9e,%.9e,%d,%d\n", rec.iteration,
                  rec.active_before, rec.threshold, rec.rho, rec.residual_norm, rec.fed_back,
                  rec.solver_fallback || rec.estimator_flag ? 1 : 0);
    csv += line;
  }
  out << "symbol errors: " << count_symbol_errors(res.decisions, inst.symbols) << " / " << o.m
      << "\n";
  write_file(o.out, "trace.csv", csv);
  return o.strict && res.flagged ? 1 : 0;
}

int run_theorem1(const Options& o, std::ostream& out) {
  const Theorem1Config cfg = to_theorem1_config(o);
  ensure_writable(o.out);
  const Theorem1Report rep = theorem1_samples(cfg);
  for (const auto& s : rep.summaries) {
    if (s.empty) {
      out << "iteration " << s.iteration << ": no trial with a wrong decision\n";
      continue;
    }
    char line[256];
    std::snprintf(line, sizeof line,
                  "iteration %d: trials=%ld samples=%ld mean=%.4f var=%.5f predicted=%.5f "
                  "ratio=%.4f corr=%.4f ks=%.4f p=%.4f p_shape=%.4f\n",
                  s.iteration, s.trials_used, s.samples, s.mean, s.empirical_variance,
                  s.predicted_variance, s.empirical_variance / s.predicted_variance,
                  s.re_im_correlation, s.ks_statistic, s.ks_pvalue, s.ks_pvalue_shape);
    out << line;
  }
  write_file(o.out, "qq.csv", rep.qq_csv());
  return 0;
}

}  // namespace

int run(const Options& o, std::ostream& out, std::ostream& err) {
  try {
    out << "# " << effective_config(o) << '\n';
    switch (o.command) {
      case Command::Sweep: return run_sweeps({to_sweep_config(o)}, o, out);
      case Command::Preset: return run_sweeps(preset_sweeps(o), o, out);
      case Command::Trace: return run_trace(o, out);
      case Command::Theorem1: return run_theorem1(o, out);
      case Command::SelfTest: return self_test(out) ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace sparse_dfe::cli

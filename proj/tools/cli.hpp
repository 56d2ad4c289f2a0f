#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparse_dfe/dfe.hpp"
#include "sparse_dfe/harness.hpp"

namespace sparse_dfe::cli {

enum class Command { Sweep, Trace, Theorem1, Preset, SelfTest };

std::string_view to_string(Command c);

enum class CliErrorKind {
  UnknownFlag,     // flag or positional argument not recognised
  InvalidToken,    // enum flag with a token outside its vocabulary
  InvalidValue,    // numeric flag that fails to parse or is out of range
  Configuration,   // flags parse but describe an invalid experiment
  MissingCommand,  // no subcommand, or more than one
};

std::string_view to_string(CliErrorKind k);

class CliError : public ConfigError {
 public:
  CliError(CliErrorKind kind, std::string flag, const std::string& message);

  CliErrorKind kind() const noexcept { return kind_; }
  // The offending flag (or command word) as typed, e.g. "--spreading".
  const std::string& flag() const noexcept { return flag_; }

 private:
  CliErrorKind kind_;
  std::string flag_;
};

struct Options {
  Command command = Command::Sweep;
  std::string preset;  // fig6 .. fig12, only for Command::Preset

  long m = 128;
  Modulation modulation = Modulation::QPSK;
  Spreading spreading = Spreading::DFT;
  EqualizerKind equalizer = EqualizerKind::MMSE;
  bool feedback = true;  // false for `--dfe off`
  ThresholdRule rule = ThresholdRule::Adaptive;
  ErrorEstimator error_estimator = ErrorEstimator::MatchedFilter;
  ThresholdNormalization normalization = ThresholdNormalization::ActiveUnknowns;
  SolverConfig solver;
  // Unset means the command's default (see effective_snr_db).
  std::optional<std::vector<double>> snr_db;
  std::optional<long> trials;
  long min_errors = 100;
  std::uint64_t seed = 1;
  std::string out = "out";
  bool strict = false;
  int threads = 1;
  int iterations = 3;  // theorem1: iterations analysed

  bool operator==(const Options&) const = default;
};

// Throws CliError. `args` excludes the program name. `env_threads` is the
// value of SPARSE_DFE_THREADS, if any; --threads wins over it.
Options parse_args(const std::vector<std::string>& args,
                   std::optional<std::string> env_threads = std::nullopt);

// One command line that parse_args maps back to the same Options.
std::string effective_config(const Options& o);

std::vector<double> effective_snr_db(const Options& o);
SweepConfig to_sweep_config(const Options& o);
Theorem1Config to_theorem1_config(const Options& o);

// The receiver configurations and sweep parameters of a figure preset. Trial
// and seed flags in `o` override the preset's desk-scale defaults.
std::vector<SweepConfig> preset_sweeps(const Options& o);
const std::vector<std::string>& preset_names();

// Quick oracle and invariant checks; prints one PASS/FAIL line each.
bool self_test(std::ostream& out);

// Executes the command. Returns the process exit status: 0 on success, 1 on
// runtime failure or (with --strict) flagged solver fallbacks.
int run(const Options& o, std::ostream& out, std::ostream& err);

}  // namespace sparse_dfe::cli

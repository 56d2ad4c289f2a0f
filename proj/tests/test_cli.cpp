#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace sparse_dfe;
using namespace sparse_dfe::cli;

namespace {

std::vector<std::string> split(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

CliError error_of(const std::string& line) {
  try {
    parse_args(split(line));
  } catch (const CliError& e) {
    return e;
  }
  FAIL("no error for: " << line);
  return CliError(CliErrorKind::MissingCommand, "", "");
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("defaults") {
  const Options o = parse_args({"sweep"});
  CHECK(o.command == Command::Sweep);
  CHECK(o.m == 128);
  CHECK(o.modulation == Modulation::QPSK);
  CHECK(o.spreading == Spreading::DFT);
  CHECK(o.equalizer == EqualizerKind::MMSE);
  CHECK(o.feedback);
  CHECK(o.rule == ThresholdRule::Adaptive);
  CHECK(o.error_estimator == ErrorEstimator::MatchedFilter);
  CHECK(o.threads == 1);
  CHECK_FALSE(o.snr_db.has_value());
  CHECK(effective_snr_db(o).size() == 9);
  CHECK(effective_snr_db(parse_args({"trace"})) == std::vector<double>{10.0});
  CHECK(effective_snr_db(parse_args({"theorem1"})) == std::vector<double>{8.0});
}

TEST_CASE("flag values reach the options") {
  const Options o = parse_args(split(
      "sweep --block-len 64 --constellation qam16 --spreading haar --equalizer convex "
      "--dfe logm --error-est l1 --snr-db 0:5:10 --trials 30 --min-errors 7 --seed 99 "
      "--out /tmp/x --strict --threads 3 --solver-max-iters 50 --solver-tol 1e-6 "
      "--l1-bound-scale 2 --threshold-norm block"));
  CHECK(o.m == 64);
  CHECK(o.modulation == Modulation::QAM16);
  CHECK(o.spreading == Spreading::Haar);
  CHECK(o.equalizer == EqualizerKind::ConvexRelaxation);
  CHECK(o.rule == ThresholdRule::LogMOnly);
  CHECK(o.error_estimator == ErrorEstimator::L1);
  CHECK(*o.snr_db == std::vector<double>{0.0, 5.0, 10.0});
  CHECK(*o.trials == 30);
  CHECK(o.min_errors == 7);
  CHECK(o.seed == 99);
  CHECK(o.out == "/tmp/x");
  CHECK(o.strict);
  CHECK(o.threads == 3);
  CHECK(o.solver.max_iters == 50);
  CHECK(o.solver.tol == 1e-6);
  CHECK(o.solver.l1_bound_scale == 2.0);
  CHECK(o.normalization == ThresholdNormalization::BlockLength);
  CHECK(*parse_args(split("sweep --snr-db 1,2.5,4")).snr_db == std::vector<double>{1.0, 2.5, 4.0});
  CHECK_FALSE(parse_args(split("sweep --dfe off")).feedback);
}

TEST_CASE("effective config round-trips") {
  for (const std::string line :
       {"sweep", "trace --seed 5 --snr-db 7", "theorem1 --iterations 2 --trials 11",
        "preset fig9 --threads 2", "selftest",
        "sweep --spreading gaussian --block-len 20 --dfe feedback-one --solver-tol 3.3e-7",
        "sweep --dfe off --equalizer zf --snr-db 0:0.5:2 --threshold-norm block --strict"}) {
    CAPTURE(line);
    const Options o = parse_args(split(line));
    const Options back = parse_args(split(effective_config(o)));
    CHECK(back == o);
  }
}

TEST_CASE("errors name their flag") {
  CliError e = error_of("sweep --bogus 1");
  CHECK(e.kind() == CliErrorKind::UnknownFlag);
  CHECK(e.flag() == "--bogus");

  e = error_of("sweep --constellation qam64");
  CHECK(e.kind() == CliErrorKind::InvalidToken);
  CHECK(e.flag() == "--constellation");

  e = error_of("sweep --dfe sometimes");
  CHECK(e.kind() == CliErrorKind::InvalidToken);
  CHECK(e.flag() == "--dfe");

  e = error_of("sweep --trials ten");
  CHECK(e.kind() == CliErrorKind::InvalidValue);
  CHECK(e.flag() == "--trials");

  e = error_of("sweep --snr-db 10:1:0");
  CHECK(e.kind() == CliErrorKind::InvalidValue);
  CHECK(e.flag() == "--snr-db");

  e = error_of("sweep --spreading hadamard --block-len 100");
  CHECK(e.kind() == CliErrorKind::Configuration);
  CHECK(e.flag() == "--spreading");

  e = error_of("preset fig99");
  CHECK(e.kind() == CliErrorKind::InvalidToken);

  CHECK(error_of("").kind() == CliErrorKind::MissingCommand);
  CHECK(error_of("launch").kind() == CliErrorKind::MissingCommand);
}

TEST_CASE("thread count from the environment") {
  CHECK(parse_args({"sweep"}, "6").threads == 6);
  CHECK(parse_args(split("sweep --threads 2"), "6").threads == 2);
  CHECK_THROWS_AS(parse_args({"sweep"}, "zero"), CliError);
}

TEST_CASE("presets") {
  CHECK(preset_names().size() == 7);
  for (const std::string& name : preset_names()) {
    const Options o = parse_args({"preset", name});
    const std::vector<SweepConfig> sweeps = preset_sweeps(o);
    REQUIRE_FALSE(sweeps.empty());
    for (const SweepConfig& s : sweeps) CHECK_NOTHROW(s.validate());
  }
  const std::vector<SweepConfig> fig6 = preset_sweeps(parse_args({"preset", "fig6"}));
  REQUIRE(fig6.size() == 1);
  CHECK(fig6[0].receivers.size() == 6);
  CHECK(preset_sweeps(parse_args({"preset", "fig11"}))[0].modulation == Modulation::QAM16);
  CHECK(preset_sweeps(parse_args({"preset", "fig12"}))[0].spreading == Spreading::Gaussian);
  CHECK(preset_sweeps(parse_args(split("preset fig6 --trials 12")))[0].trials_per_point == 12);
}

TEST_CASE("sweep options map onto a sweep config") {
  const SweepConfig s = to_sweep_config(parse_args(split("sweep --dfe off --equalizer zf --trials 9")));
  REQUIRE(s.receivers.size() == 1);
  CHECK_FALSE(s.receivers[0].feedback);
  CHECK(s.receivers[0].dfe.equalizer == EqualizerKind::ZF);
  CHECK(s.trials_per_point == 9);
}

TEST_CASE("running writes the CSV and reports IO errors") {
  const auto dir = std::filesystem::temp_directory_path() / "sparse_dfe_cli_test";
  std::filesystem::remove_all(dir);
  std::ostringstream out, err;
  const Options o = parse_args(split("sweep --block-len 8 --snr-db 4,8 --trials 5 --out " + dir.string()));
  CHECK(run(o, out, err) == 0);
  std::ifstream f(dir / "ber.csv");
  REQUIRE(f.good());
  std::string header;
  std::getline(f, header);
  CHECK(header == "config,snr_db,bits,bit_errors,ber,ci_lo,ci_hi,mean_iters,median_iters,mean_fb0");
  CHECK(out.str().rfind("# sweep", 0) == 0);

  std::ostringstream out2, err2;
  const Options bad = parse_args(split("trace --block-len 8 --out /proc/no/such/dir"));
  CHECK(run(bad, out2, err2) == 1);
  CHECK(err2.str().find("output directory") != std::string::npos);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE

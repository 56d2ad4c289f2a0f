#include <doctest.h>

#include <cmath>
#include <limits>

#include "sparse_dfe/harness.hpp"

using namespace sparse_dfe;

namespace {

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.m = 16;
  cfg.snr_db = {4.0, 8.0};
  NamedReceiver mmse{"MMSE", DfeConfig{}, false};
  NamedReceiver dfe{"MMSE+thresh", DfeConfig{}, true};
  cfg.receivers = {mmse, dfe};
  cfg.trials_per_point = 60;
  cfg.min_trials = 60;
  cfg.min_bit_errors = std::numeric_limits<long>::max();
  cfg.master_seed = 9;
  return cfg;
}

double metric(const SystemInstance& inst, const HardDecision& d) {
  return (inst.y - inst.A * inst.constellation->values(d)).squaredNorm();
}

BerPoint point(const std::string& name, double snr, double ber) {
  BerPoint p;
  p.config = name;
  p.snr_db = snr;
  p.ber = ber;
  return p;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("sweep results do not depend on the thread count") {
  SweepConfig cfg = small_sweep();
  const BerReport one = run_sweep(cfg);
  cfg.threads = 4;
  const BerReport four = run_sweep(cfg);
  CHECK(one.to_csv() == four.to_csv());
  cfg.spreading = Spreading::Haar;
  cfg.threads = 1;
  const std::string haar1 = run_sweep(cfg).to_csv();
  cfg.threads = 3;
  CHECK(haar1 == run_sweep(cfg).to_csv());
}

TEST_CASE("sweep bookkeeping") {
  const SweepConfig cfg = small_sweep();
  long calls = 0;
  const BerReport rep = run_sweep(cfg, [&](const BerPoint&) { ++calls; });
  CHECK(calls == 4);
  REQUIRE(rep.points.size() == 4);
  for (const BerPoint& p : rep.points) {
    CHECK(p.trials == 60);
    CHECK(p.bits == 60 * 16 * 2);
    CHECK(p.symbols == 60 * 16);
    CHECK(p.ber == doctest::Approx(double(p.bit_errors) / double(p.bits)));
    CHECK(p.ci_lo <= p.ber);
    CHECK(p.ber <= p.ci_hi);
    CHECK(p.symbol_errors <= p.bit_errors);
    CHECK(p.bit_errors <= 2 * p.symbol_errors);
  }
  const BerPoint* mmse = rep.find("MMSE", 8.0);
  REQUIRE(mmse != nullptr);
  CHECK(mmse->mean_iters == 0.0);
  CHECK(mmse->mean_fb0 == 0.0);
  const BerPoint* dfe = rep.find("MMSE+thresh", 8.0);
  REQUIRE(dfe != nullptr);
  CHECK(dfe->mean_iters >= 1.0);
  CHECK(dfe->mean_fb0 > 0.0);
  CHECK(rep.find("nope", 8.0) == nullptr);
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("config,snr_db,bits,bit_errors,ber,ci_lo,ci_hi,mean_iters,median_iters,mean_fb0\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("block standard error") {
  BerPoint p;
  p.trials = 4;
  p.bits = 40;
  p.bit_errors = 4;
  p.ber = 0.1;
  // Blocks with 0, 0, 0 and 4 errors: sample variance 4, so sqrt(4 / 4) / 10.
  p.block_error_sq_sum = 16.0;
  CHECK(p.ber_block_stderr() == doctest::Approx(0.1));
  CHECK(p.ber_stderr() == doctest::Approx(std::sqrt(0.09 / 40.0)));
  p.block_error_sq_sum = 4.0;  // one error in every block
  CHECK(p.ber_block_stderr() == doctest::Approx(0.0));
}

TEST_CASE("a point stops once it has enough errors") {
  SweepConfig cfg = small_sweep();
  cfg.snr_db = {0.0};
  cfg.min_bit_errors = 1;
  cfg.min_trials = 5;
  const BerReport rep = run_sweep(cfg);
  for (const BerPoint& p : rep.points) {
    CHECK(p.trials == 5);
    CHECK(p.bit_errors >= 1);
  }
}

TEST_CASE("very high SNR gives no errors") {
  SweepConfig cfg = small_sweep();
  cfg.snr_db = {100.0};
  for (const BerPoint& p : run_sweep(cfg).points) {
    CHECK(p.bit_errors == 0);
    CHECK(p.ber == 0.0);
    CHECK(p.ci_lo == 0.0);
    CHECK(p.ci_hi > 0.0);
  }
}

TEST_CASE("sweep validation") {
  SweepConfig cfg = small_sweep();
  cfg.snr_db.clear();
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_sweep();
  cfg.receivers.clear();
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_sweep();
  cfg.spreading = Spreading::Hadamard;
  cfg.m = 12;
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_sweep();
  cfg.threads = 0;
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
  cfg = small_sweep();
  cfg.receivers[0].name.clear();
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
}

TEST_CASE("ML oracle") {
  Rng rng = make_stream(70, {0});
  const Constellation& c = Constellation::get(Modulation::QPSK);
  SUBCASE("noiseless instances are recovered") {
    for (int t = 0; t < 5; ++t) {
      const SystemInstance inst = draw_instance(Spreading::Haar, 6, c, 0.0, rng);
      CHECK(ml_oracle(inst) == inst.symbols);
    }
  }
  SUBCASE("a single symbol is the nearest point of y / a") {
    for (int t = 0; t < 20; ++t) {
      const SystemInstance inst = draw_instance(Spreading::DFT, 1, c, 0.5, rng);
      const HardDecision d = ml_oracle(inst);
      REQUIRE(d.size() == 1);
      CHECK(d.symbols[0] == c.nearest(inst.y[0] / inst.A(0, 0)));
    }
  }
  SUBCASE("no receiver beats the ML metric") {
    for (int t = 0; t < 10; ++t) {
      const SystemInstance inst = draw_instance(Spreading::DFT, 6, c, snr_to_sigma2(2.0), rng);
      const double best = metric(inst, ml_oracle(inst));
      CHECK(best <= metric(inst, inst.symbols) + 1e-9);
      CHECK(best <= metric(inst, run_dfe(inst, DfeConfig{}).decisions) + 1e-9);
    }
  }
  SUBCASE("oversized searches are refused") {
    const SystemInstance inst =
        draw_instance(Spreading::DFT, 8, Constellation::get(Modulation::QAM16), 0.1, rng);
    CHECK_THROWS_AS(ml_oracle(inst), SearchSpaceError);
  }
}

TEST_CASE("SNR at a target BER") {
  BerReport rep;
  rep.points = {point("a", 4.0, 1e-3), point("a", 0.0, 1e-1), point("a", 2.0, 1e-2),
                point("b", 0.0, 1e-1), point("b", 2.0, 0.0), point("c", 0.0, 1e-4)};
  CHECK(*snr_at_ber(rep, "a", 1e-2) == doctest::Approx(2.0));
  CHECK(*snr_at_ber(rep, "a", std::sqrt(1e-1 * 1e-2)) == doctest::Approx(1.0));
  CHECK(*snr_at_ber(rep, "a", std::pow(10.0, -2.25)) == doctest::Approx(2.5));
  CHECK(*snr_at_ber(rep, "b", 1e-3) == 2.0);
  CHECK_FALSE(snr_at_ber(rep, "a", 1e-5).has_value());
  CHECK_FALSE(snr_at_ber(rep, "c", 1e-3).has_value());
  CHECK_FALSE(snr_at_ber(rep, "missing", 1e-3).has_value());
}

TEST_CASE("Theorem 1 samples") {
  Theorem1Config cfg;
  cfg.m = 32;
  cfg.trials = 40;
  cfg.snr_db = 4.0;
  cfg.iterations = 2;
  const Theorem1Report rep = theorem1_samples(cfg);
  REQUIRE(rep.summaries.size() == 2);
  const Theorem1Summary& s0 = rep.summaries[0];
  CHECK_FALSE(s0.empty);
  CHECK(s0.samples == 2 * 32 * s0.trials_used);
  CHECK(s0.predicted_variance > snr_to_sigma2(4.0));
  CHECK(s0.ks_pvalue >= 0.0);
  CHECK(s0.ks_pvalue <= 1.0);
  CHECK(rep.qq_csv().rfind("iteration,sample_q,theory_q\n", 0) == 0);
  cfg.threads = 3;
  CHECK(theorem1_samples(cfg).qq_csv() == rep.qq_csv());

  cfg.snr_db = 80.0;
  const Theorem1Report clean = theorem1_samples(cfg);
  for (const Theorem1Summary& s : clean.summaries) {
    CHECK(s.empty);
    CHECK(s.trials_used == 0);
  }
}

TEST_CASE("first-iteration feedback scenario") {
  FeedbackScenarioConfig cfg;
  cfg.m = 64;
  cfg.trials = 30;
  const FeedbackScenarioReport rep = feedback_scenario(cfg);
  CHECK(rep.trials == 30);
  CHECK(rep.median_true_errors <= 6.0);
  CHECK(rep.wrong_fed_back <= rep.total_fed_back);
  CHECK(rep.wrong_inclusion_rate >= 0.0);
  CHECK(rep.wrong_inclusion_rate <= 1.0);
  CHECK(rep.median_fed_back >= 1.0);
  CHECK(rep.median_fed_back <= 64.0);
  CHECK(rep.median_threshold > 0.0);
}

}  // TEST_SUITE

#include <benchmark/benchmark.h>

#include "sparse_dfe/dfe.hpp"
#include "sparse_dfe/harness.hpp"

using namespace sparse_dfe;

namespace {

SystemInstance instance(long m, double snr_db, Spreading sp = Spreading::DFT) {
  Rng rng = make_stream(1, {static_cast<std::uint64_t>(m)});
  return draw_instance(sp, m, Constellation::get(Modulation::QPSK), snr_to_sigma2(snr_db), rng);
}

void BM_BoxLs(benchmark::State& state) {
  const SystemInstance inst = instance(state.range(0), 10.0);
  const NormalEquations ne = NormalEquations::from(inst.A, inst.y);
  const double bound = inst.constellation->box_bound();
  for (auto _ : state) benchmark::DoNotOptimize(box_ls(ne, bound, SolverConfig{}));
}
BENCHMARK(BM_BoxLs)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_L1(benchmark::State& state) {
  const SystemInstance inst = instance(state.range(0), 10.0);
  const CVector r = inst.y - inst.A * inst.constellation->values(
                                          detect(inst.A.adjoint() * inst.y, *inst.constellation));
  for (auto _ : state) {
    benchmark::DoNotOptimize(error_estimate_l1(inst.A, r, inst.sigma2, SolverConfig{}));
  }
}
BENCHMARK(BM_L1)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Dfe(benchmark::State& state) {
  const SystemInstance inst = instance(state.range(0), 10.0);
  DfeConfig cfg;
  cfg.threshold_rule = static_cast<ThresholdRule>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_dfe(inst, cfg));
}
BENCHMARK(BM_Dfe)
    ->Args({128, static_cast<long>(ThresholdRule::Adaptive)})
    ->Args({128, static_cast<long>(ThresholdRule::FeedbackOne)})
    ->Args({1024, static_cast<long>(ThresholdRule::Adaptive)})
    ->Unit(benchmark::kMicrosecond);

void BM_MlOracle(benchmark::State& state) {
  const SystemInstance inst = instance(state.range(0), 6.0, Spreading::Haar);
  for (auto _ : state) benchmark::DoNotOptimize(ml_oracle(inst));
}
BENCHMARK(BM_MlOracle)->Arg(4)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_SweepPoint(benchmark::State& state) {
  SweepConfig cfg;
  cfg.snr_db = {10.0};
  cfg.receivers = {{"MMSE+thresh", DfeConfig{}, true}};
  cfg.trials_per_point = 100;
  cfg.min_trials = 100;
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(cfg));
}
BENCHMARK(BM_SweepPoint)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

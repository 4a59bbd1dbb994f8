// Serial reference vs OpenMP kernels on identical inputs.
#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "ringlock/cavity.hpp"
#include "ringlock/dsp.hpp"
#include "ringlock/noise.hpp"
#include "ringlock/pdh.hpp"
#include "ringlock/servo.hpp"

using namespace ringlock;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_ErrorSweep(benchmark::State& state) {
  const auto p = derive_params(CavityConfig{});
  const ModulationConfig m;
  std::vector<double> det(100000);
  for (std::size_t i = 0; i < det.size(); ++i) det[i] = -15e6 + 300.0 * static_cast<double>(i);
  for (auto _ : state) benchmark::DoNotOptimize(error_signal_sweep(p, m, det, mode(state)));
}

void BM_Bode(benchmark::State& state) {
  const auto chain = ServoChain::reference_default();
  const double pole = derive_params(CavityConfig{}).cavity_pole_hz();
  const auto grid = log_frequency_grid(1e-2, 1e8, 20000);
  for (auto _ : state) benchmark::DoNotOptimize(bode(chain, pole, grid, mode(state)));
}

void BM_Welch(benchmark::State& state) {
  NoiseConfig c;
  c.shot_noise_enabled = true;
  c.detector_psd_w_rthz = 1.0;
  const auto s = sample_noise(c, 1 << 22, 1e6);
  for (auto _ : state)
    benchmark::DoNotOptimize(welch_psd(s.detector_w, 1e6, {4096, 0.5, Window::hann}, mode(state)));
}

void BM_RingdownMonteCarlo(benchmark::State& state) {
  const auto p = derive_params(CavityConfig{});
  const RingdownConfig rc{400e-6, 10e6, 1e-3, 0.01, 0};
  std::vector<std::uint64_t> seeds(64);
  std::iota(seeds.begin(), seeds.end(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(ringdown_monte_carlo(p, rc, seeds, mode(state)));
}

}  // namespace

BENCHMARK(BM_ErrorSweep)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bode)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Welch)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RingdownMonteCarlo)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <cmath>

#include "jm/estimators.hpp"

namespace {

using namespace jm;

// Values-only kernel: Fourier moments of F_M on example3-levy.
PathKernel draws_kernel(const Experiment& ex) {
  return [&ex](std::uint64_t i, double* out) {
    const auto f = regularize(ex.draws(i), ex.variance());
    for (int j = 0; j < 8; ++j) {
      out[2 * j] = std::cos((j + 1) * f[0]);
      out[2 * j + 1] = std::sin((j + 1) * f[0]);
    }
    return true;
  };
}

// Jet kernel: first-order IBP weight on one-jump.
PathKernel ibp_kernel(const Experiment& ex) {
  return [&ex](std::uint64_t i, double* out) {
    const PathRecord rec = ex.path(i);
    const auto fm = regularize(rec, ex.variance());
    const IbpContext ctx(fm, rec.weights, rec.log_density);
    const std::array<int, 1> beta{1};
    out[0] = ctx.ibp_weight(beta, Jet(1.0)).value;
    return true;
  };
}

const Experiment& experiment(const char* preset) {
  static const Experiment levy(default_config("example3-levy"), {2, 1, 1});
  static const Experiment jump(default_config("one-jump"), {2, 1, 1});
  return std::string(preset) == "one-jump" ? jump : levy;
}

void BM_DrawsSerial(benchmark::State& state) {
  const auto kernel = draws_kernel(experiment("example3-levy"));
  const MapReduceOptions opt{16, true, 1, 1024};
  for (auto _ : state) benchmark::DoNotOptimize(map_reduce_serial(state.range(0), kernel, opt).mean(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DrawsParallel(benchmark::State& state) {
  const auto kernel = draws_kernel(experiment("example3-levy"));
  const MapReduceOptions opt{16, true, static_cast<int>(state.range(1)), 1024};
  for (auto _ : state) benchmark::DoNotOptimize(map_reduce_parallel(state.range(0), kernel, opt).mean(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_IbpSerial(benchmark::State& state) {
  const auto kernel = ibp_kernel(experiment("one-jump"));
  const MapReduceOptions opt{1, false, 1, 256};
  for (auto _ : state) benchmark::DoNotOptimize(map_reduce_serial(state.range(0), kernel, opt).mean(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_IbpParallel(benchmark::State& state) {
  const auto kernel = ibp_kernel(experiment("one-jump"));
  const MapReduceOptions opt{1, false, static_cast<int>(state.range(1)), 256};
  for (auto _ : state) benchmark::DoNotOptimize(map_reduce_parallel(state.range(0), kernel, opt).mean(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_DrawsSerial)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DrawsParallel)->Args({1 << 14, 1})->Args({1 << 14, 2})->Args({1 << 14, 4})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_IbpSerial)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IbpParallel)->Args({2048, 1})->Args({2048, 2})->Args({2048, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "adaconv/image.hpp"
#include "adaconv/infer.hpp"
#include "adaconv/net.hpp"
#include "adaconv/rng.hpp"

using namespace adaconv;

namespace {

Frame random_frame(int w, int h, uint64_t seed) {
  Frame f(w, h);
  Rng rng(seed);
  for (float& v : f.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return f;
}

}  // namespace

static void BM_InterpolatePixelwise(benchmark::State& state) {
  int size = static_cast<int>(state.range(0));
  KernelNet net = init_network<float>(NetworkConfig::desk(), 1);
  Frame i1 = random_frame(size, size, 2);
  Frame i2 = random_frame(size, size, 3);
  for (auto _ : state) {
    Frame out = interpolate_pixelwise(net, i1, i2);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_InterpolatePixelwise)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_InterpolateShiftStitch(benchmark::State& state) {
  int size = static_cast<int>(state.range(0));
  KernelNet net = init_network<float>(NetworkConfig::desk(), 1);
  Frame i1 = random_frame(size, size, 2);
  Frame i2 = random_frame(size, size, 3);
  for (auto _ : state) {
    Frame out = interpolate_shift_stitch(net, i1, i2);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_InterpolateShiftStitch)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "adaconv/layers.hpp"
#include "adaconv/net.hpp"
#include "adaconv/rng.hpp"

using namespace adaconv;

namespace {

Tensor random_tensor(std::vector<int> dims, uint64_t seed) {
  Tensor t(std::move(dims));
  Rng rng(seed);
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

ConvParams<float> random_params(int oc, int ic, int k, int stride, uint64_t seed) {
  ConvParams<float> p;
  p.weights = random_tensor({oc, ic, k, k}, seed);
  p.bias = random_tensor({oc}, seed + 1);
  p.stride_h = p.stride_w = stride;
  return p;
}

}  // namespace

// First conv layer of the desk architecture on a batch of receptive fields.
static void BM_ConvForwardDeskEntry(benchmark::State& state) {
  int batch = static_cast<int>(state.range(0));
  Tensor input = random_tensor({batch, 6, 23, 23}, 1);
  ConvParams<float> params = random_params(16, 6, 7, 1, 2);
  for (auto _ : state) {
    Tensor out = conv2d_forward(input, params);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ConvForwardDeskEntry)->Arg(1)->Arg(8)->Arg(32);

static void BM_ConvBackwardDeskEntry(benchmark::State& state) {
  int batch = static_cast<int>(state.range(0));
  Tensor input = random_tensor({batch, 6, 23, 23}, 3);
  ConvParams<float> params = random_params(16, 6, 7, 1, 4);
  Tensor upstream = random_tensor({batch, 16, 17, 17}, 5);
  for (auto _ : state) {
    auto grads = conv2d_backward(input, params, upstream);
    benchmark::DoNotOptimize(grads.d_weights.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ConvBackwardDeskEntry)->Arg(8)->Arg(32);

// Whole-network single-sample kernel estimation at desk scale.
static void BM_KernelForwardDesk(benchmark::State& state) {
  KernelNet net = init_network<float>(NetworkConfig::desk(), 7);
  Tensor r1 = random_tensor({3, 23, 23}, 8);
  Tensor r2 = random_tensor({3, 23, 23}, 9);
  for (auto _ : state) {
    KernelPair kernel = forward_kernel(net, r1, r2);
    benchmark::DoNotOptimize(kernel.k1.data());
  }
}
BENCHMARK(BM_KernelForwardDesk);

static void BM_SpatialSoftmax(benchmark::State& state) {
  Tensor logits = random_tensor({1, 3362, 1, 1}, 10);
  for (auto _ : state) {
    Tensor out = spatial_softmax_forward(logits);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_SpatialSoftmax);

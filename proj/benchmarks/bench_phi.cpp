#include <benchmark/benchmark.h>

#include "lsvd/phi.hpp"
#include "lsvd/rng.hpp"

namespace {

// Phi at latent size: 64x64 channels give 4096 inputs and hidden units.
void BM_PhiForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const lsvd::PhiDims dims = lsvd::PhiDims::for_channel(64, 64);
  const lsvd::PhiModel model = lsvd::init_model(dims, 1);
  lsvd::NormalSampler g(2);
  lsvd::Matrix inputs(batch, dims.in);
  for (double& v : inputs.values()) v = g.next();
  const lsvd::Matrix ones(batch, dims.out, 1.0);
  for (auto _ : state) {
    const lsvd::PhiOutput out = lsvd::phi_forward(model, inputs);
    benchmark::DoNotOptimize(lsvd::phi_backward(model, out.cache, ones, ones));
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * batch));
}
BENCHMARK(BM_PhiForwardBackward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "lsvd/matrix.hpp"
#include "lsvd/rng.hpp"
#include "lsvd/svd.hpp"
#include "lsvd/subspace.hpp"
#include "lsvd/avi.hpp"

namespace {

lsvd::Matrix gaussian(std::size_t n, std::uint64_t seed) {
  lsvd::NormalSampler g(seed);
  lsvd::Matrix m(n, n);
  for (double& v : m.values()) v = g.next();
  return m;
}

void BM_Svd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const lsvd::Matrix m = gaussian(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lsvd::svd(m));
}
BENCHMARK(BM_Svd)->Arg(8)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_AviInference(benchmark::State& state) {
  const lsvd::Matrix x = gaussian(64, 2), z = gaussian(64, 3);
  const lsvd::SvdTriple sx = lsvd::svd(x), sz = lsvd::svd(z);
  const lsvd::Vector ds(64, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        lsvd::avi_forward(sx, sz, sx.S, ds, {32, 1.0, {}}, lsvd::Stage::Inference));
  }
}
BENCHMARK(BM_AviInference)->Unit(benchmark::kMicrosecond);

void BM_Geodesic(benchmark::State& state) {
  const lsvd::Matrix a = gaussian(64, 4), b = gaussian(64, 5);
  for (auto _ : state) benchmark::DoNotOptimize(lsvd::geodesic_distance(a, b, 4));
}
BENCHMARK(BM_Geodesic)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

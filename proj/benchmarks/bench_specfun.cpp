#include <benchmark/benchmark.h>

#include "qps/specfun.hpp"

namespace {

void BM_Hankel01(benchmark::State& state) {
  const double x0 = static_cast<double>(state.range(0));
  double x = x0;
  for (auto _ : state) {
    auto h = qps::hankel01(x);
    benchmark::DoNotOptimize(h);
    x += 1e-9;  // defeat value caching without leaving the regime
  }
}
BENCHMARK(BM_Hankel01)->Arg(1)->Arg(10)->Arg(100);

void BM_KernelSplitT(benchmark::State& state) {
  const qps::Point2 x{0.0, 0.0}, nu{0.0, 1.0};
  qps::Point2 y{0.01, 0.002};
  for (auto _ : state) {
    auto s = qps::kernel_split(qps::KernelKind::T, 2.5, x, y, nu, nu);
    benchmark::DoNotOptimize(s);
    y.x += 1e-9;
  }
}
BENCHMARK(BM_KernelSplitT);

}  // namespace

BENCHMARK_MAIN();

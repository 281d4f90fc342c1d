#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "qps/solver.hpp"

namespace {

using namespace qps;

Mat random_mat(int r, int c, std::mt19937& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = Complex(N(rng), N(rng));
  return m;
}

void BM_BlockThomas(benchmark::State& state) {
  const int blocks = static_cast<int>(state.range(0));
  const int bs = 48;
  std::mt19937 rng(7);
  std::vector<Mat> X, Y(blocks), Z(blocks);
  for (int i = 0; i < blocks; ++i) {
    X.push_back(random_mat(bs, bs, rng) + 6.0 * Mat::Identity(bs, bs));
    if (i > 0) Y[i] = random_mat(bs, bs, rng);
    if (i + 1 < blocks) Z[i] = random_mat(bs, bs, rng);
  }
  const Vec rhs = random_mat(blocks * bs, 1, rng);
  for (auto _ : state) {
    Vec x = block_thomas(X, Y, Z, rhs);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_BlockThomas)->Arg(4)->Arg(16)->Arg(64);

struct Fixture {
  SystemBlocks sys;
  PrecompI pI;
  PrecompII pII;
};

const Fixture& fixture(int panels) {
  static std::map<int, Fixture> cache;
  auto it = cache.find(panels);
  if (it == cache.end()) {
    LayerStack stack;
    stack.period = 1.0;
    stack.wavenumbers = {10.0, 10.0 * std::sqrt(2.0), 10.0};
    stack.interfaces = {
        InterfaceGeometry::fourier({1.0}, true, 0.1, 1.0, 0.0),
        InterfaceGeometry::fourier({1.0, 0.3}, false, 0.08, 1.0, -1.0)};
    const UnitCellParams params;
    std::vector<Discretization> discs;
    for (const auto& g : stack.interfaces)
      discs.push_back(build_discretization(g, panels, params));
    Fixture f{assemble_system(stack, discs, params), {}, {}};
    f.pI = precompute_I(f.sys, SolverOptions{});
    f.pII = precompute_II(f.sys, f.pI);
    it = cache.emplace(panels, std::move(f)).first;
  }
  return it->second;
}

void BM_NeighborCompression(benchmark::State& state) {
  const int panels = static_cast<int>(state.range(0));
  const auto& f = fixture(panels);
  const CompressionParams prm;
  for (auto _ : state) {
    auto nb = compress_neighbor(f.sys.interfaces[0],
                                f.sys.stack.wavenumbers[0],
                                f.sys.stack.wavenumbers[1], Side::plus, prm);
    benchmark::DoNotOptimize(nb.L);
  }
  state.counters["N"] = 16.0 * panels;
}
BENCHMARK(BM_NeighborCompression)->Arg(20)->Arg(40)->Arg(80)
    ->Unit(benchmark::kMillisecond);

void BM_PrecompIII(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const double theta = -1.1;
  const IncidentWave inc(f.sys.stack, theta);
  for (auto _ : state) {
    auto ps = precompute_III(f.sys, f.pI, f.pII, inc.bloch_alpha(), theta, 0,
                             SolverOptions{});
    benchmark::DoNotOptimize(ps.svd_rank);
  }
}
BENCHMARK(BM_PrecompIII)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SolveAngle(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const double theta = -1.1;
  const IncidentWave inc(f.sys.stack, theta);
  const auto ps = precompute_III(f.sys, f.pI, f.pII, inc.bloch_alpha(), theta,
                                 0, SolverOptions{});
  for (auto _ : state) {
    auto res = solve(f.sys, f.pI, f.pII, ps, theta);
    benchmark::DoNotOptimize(res.flux_error);
  }
}
BENCHMARK(BM_SolveAngle)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

// Serial vs OpenMP timings for the hot kernels. The parallel variants are
// bitwise-identical to the serial ones by construction; this target only
// measures the speedup.

#include <benchmark/benchmark.h>

#include <random>

#include "artkin/kernels.hpp"
#include "artkin/part_solver.hpp"

using namespace artkin;

namespace {

std::vector<Vec3> random_cloud(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(g(rng), g(rng), g(rng));
  return out;
}

struct PairFixture {
  std::vector<Vec3> x0, xt;
  std::vector<unsigned char> valid;
  std::vector<double> logits, w0;
  NeighborGraph graph;
  RigidTransform t0, t1;
  PairLossConfig cfg;

  explicit PairFixture(int n) {
    x0 = random_cloud(n, 1);
    xt = random_cloud(n, 2);
    valid.assign(n, 1);
    logits.assign(n, 0.3);
    w0.assign(n, 0.95);
    graph.offsets.assign(n + 1, 0);
    t1.translation = Vec3(0.05, 0, 0);
  }
};

void bm_pair_loss(benchmark::State& state, bool parallel) {
  PairFixture f(static_cast<int>(state.range(0)));
  std::vector<double> gl(f.x0.size());
  double g0[6], g1[6];
  for (auto _ : state) {
    auto b = pair_loss(f.x0.data(), f.xt.data(), f.valid.data(),
                       static_cast<int>(f.x0.size()), f.t0, f.t1, f.logits.data(), f.w0.data(),
                       f.graph.view(), f.cfg, gl.data(), g0, g1, parallel);
    benchmark::DoNotOptimize(b.total);
  }
}

void bm_chamfer_brute(benchmark::State& state) {
  auto a = random_cloud(static_cast<int>(state.range(0)), 3);
  auto b = random_cloud(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_forward_bruteforce(a, b));
}

void bm_chamfer_grid(benchmark::State& state, bool parallel) {
  auto a = random_cloud(static_cast<int>(state.range(0)), 3);
  auto b = random_cloud(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_forward(a, b, parallel));
}

void bm_axis_scan(benchmark::State& state, bool parallel) {
  Mat3 a;
  a << 2, 0.1, 0, 0.1, 1.5, 0.05, 0, 0.05, 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(axis_grid_scan(a, 100000, parallel));
}

}  // namespace

BENCHMARK_CAPTURE(bm_pair_loss, serial, false)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(bm_pair_loss, omp, true)->Arg(1000)->Arg(10000);
BENCHMARK(bm_chamfer_brute)->Arg(1000)->Arg(2000);
BENCHMARK_CAPTURE(bm_chamfer_grid, serial, false)->Arg(1000)->Arg(2000)->Arg(20000);
BENCHMARK_CAPTURE(bm_chamfer_grid, omp, true)->Arg(1000)->Arg(2000)->Arg(20000);
BENCHMARK_CAPTURE(bm_axis_scan, serial, false);
BENCHMARK_CAPTURE(bm_axis_scan, omp, true);

BENCHMARK_MAIN();

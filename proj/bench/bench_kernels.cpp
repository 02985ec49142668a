// Serial reference vs OpenMP kernels. Arguments: problem size, thread count.

#include <benchmark/benchmark.h>

#include <vector>

#include "drcl/eval.hpp"
#include "drcl/kernels.hpp"
#include "drcl/rng.hpp"

namespace {

using drcl::Matrix;

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  drcl::SeededRng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

std::vector<int> labels(std::size_t n, std::uint64_t seed) {
  drcl::SeededRng rng(seed);
  std::vector<int> out(n);
  for (int& l : out) l = static_cast<int>(rng.below(10));
  return out;
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = gaussian(n, n, 1), b = gaussian(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(drcl::kernels::serial::matmul(a, b));
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  drcl::kernels::set_num_threads(static_cast<int>(state.range(1)));
  const Matrix a = gaussian(n, n, 1), b = gaussian(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(drcl::kernels::matmul(a, b));
}

void BM_PairwiseCosineSerial(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const Matrix f = gaussian(b, 64, 3), t = gaussian(b, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(drcl::kernels::serial::pairwise_cosine_consistency(f, t));
}

void BM_PairwiseCosineParallel(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  drcl::kernels::set_num_threads(static_cast<int>(state.range(1)));
  const Matrix f = gaussian(b, 64, 3), t = gaussian(b, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(drcl::kernels::pairwise_cosine_consistency(f, t));
}

void BM_MapSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix q = gaussian(n, 32, 5), g = gaussian(n, 32, 6);
  const auto ql = labels(n, 7), gl = labels(n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(drcl::serial::map_score(q, ql, g, gl, drcl::NRank{}));
}

void BM_MapParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  drcl::kernels::set_num_threads(static_cast<int>(state.range(1)));
  const Matrix q = gaussian(n, 32, 5), g = gaussian(n, 32, 6);
  const auto ql = labels(n, 7), gl = labels(n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(drcl::map_score(q, ql, g, gl, drcl::NRank{}));
}

void thread_grid(benchmark::internal::Benchmark* b, std::vector<long> sizes) {
  for (long n : sizes)
    for (long t : {1, 2, 4, 8}) b->Args({n, t});
}

BENCHMARK(BM_MatmulSerial)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatmulParallel)->Apply([](auto* b) { thread_grid(b, {128, 512}); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseCosineSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseCosineParallel)->Apply([](auto* b) { thread_grid(b, {64, 256}); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapSerial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapParallel)->Apply([](auto* b) { thread_grid(b, {500, 2000}); })->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

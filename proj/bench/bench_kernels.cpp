#include <benchmark/benchmark.h>

#include <random>

#include "actnorm/eigen.hpp"
#include "actnorm/matrix.hpp"

namespace {

actnorm::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  actnorm::Matrix m(rows, cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
  return m;
}

void bm_matmul_nn_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const actnorm::Matrix a = random_matrix(n, n, 1);
  const actnorm::Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(actnorm::kernels::matmul_nn_serial(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}

void bm_matmul_nn_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const actnorm::Matrix a = random_matrix(n, n, 1);
  const actnorm::Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(actnorm::kernels::matmul_nn(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}

void bm_matmul_nt_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const actnorm::Matrix a = random_matrix(n, n, 3);
  const actnorm::Matrix b = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(actnorm::kernels::matmul_nt_serial(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}

void bm_matmul_nt_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const actnorm::Matrix a = random_matrix(n, n, 3);
  const actnorm::Matrix b = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(actnorm::kernels::matmul_nt(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}

void bm_matmul_tn_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const actnorm::Matrix a = random_matrix(n, n, 5);
  const actnorm::Matrix b = random_matrix(n, n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(actnorm::kernels::matmul_tn_serial(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}

void bm_matmul_tn_parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const actnorm::Matrix a = random_matrix(n, n, 5);
  const actnorm::Matrix b = random_matrix(n, n, 6);
  for (auto _ : state) benchmark::DoNotOptimize(actnorm::kernels::matmul_tn(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}

void bm_symmetric_eigenvalues(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const actnorm::Matrix x = random_matrix(n, n, 7);
  const actnorm::Matrix gram = actnorm::kernels::matmul_nt(x, x);
  for (auto _ : state) benchmark::DoNotOptimize(actnorm::symmetric_eigenvalues(gram));
}

}  // namespace

BENCHMARK(bm_matmul_nn_serial)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_nn_parallel)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_nt_serial)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_nt_parallel)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_tn_serial)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bm_matmul_tn_parallel)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(bm_symmetric_eigenvalues)->Arg(128)->Arg(256);

BENCHMARK_MAIN();

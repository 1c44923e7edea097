// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to compare.

#include "dcca/kernels.hpp"
#include "dcca/signal.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace dcca;

namespace {

Matrix data(Index rows, Index cols) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Matrix M(rows, cols);
  for (Index i = 0; i < M.size(); ++i) M.data()[i] = n(rng);
  return M;
}

void BM_cross_product_serial(benchmark::State& s) {
  const Matrix A = data(s.range(0), 128), B = data(s.range(0), 96);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::cross_product_serial(A, B));
}
void BM_cross_product(benchmark::State& s) {
  const Matrix A = data(s.range(0), 128), B = data(s.range(0), 96);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::cross_product(A, B));
}

const std::vector<double>& taps() {
  static const std::vector<double> t = [] {
    std::vector<double> v(129);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / static_cast<double>(v.size());
    return v;
  }();
  return t;
}

void BM_filter_columns_serial(benchmark::State& s) {
  const Matrix X = data(s.range(0), 32);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::filter_columns_serial(X, taps()));
}
void BM_filter_columns(benchmark::State& s) {
  const Matrix X = data(s.range(0), 32);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::filter_columns(X, taps()));
}

std::vector<std::vector<double>> bank() {
  std::vector<std::vector<double>> b;
  for (const auto& band : design_filterbank(64.0).bands) b.push_back(band.taps);
  return b;
}

void BM_filterbank_serial(benchmark::State& s) {
  const auto fb = bank();
  const Matrix X = data(s.range(0), 4);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::filterbank_serial(X, fb));
}
void BM_filterbank(benchmark::State& s) {
  const auto fb = bank();
  const Matrix X = data(s.range(0), 4);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::filterbank(X, fb));
}

void BM_lag_embed_serial(benchmark::State& s) {
  const Matrix X = data(s.range(0), 16);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::lag_embed_serial(X, 60));
}
void BM_lag_embed(benchmark::State& s) {
  const Matrix X = data(s.range(0), 16);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::lag_embed(X, 60));
}

}  // namespace

BENCHMARK(BM_cross_product_serial)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cross_product)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_filter_columns_serial)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_filter_columns)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_filterbank_serial)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_filterbank)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lag_embed_serial)->Arg(16384)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lag_embed)->Arg(16384)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

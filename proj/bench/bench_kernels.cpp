#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "amo/kernels.hpp"

namespace k = amo::kernels;

namespace {

std::vector<double> amo_diagonal(std::size_t n, double lambda) {
  const double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = 2.0 * lambda * std::cos(2.0 * M_PI * alpha * static_cast<double>(i));
  return d;
}

struct Atoms {
  std::vector<double> y, w;
};

Atoms random_atoms(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Atoms a;
  for (std::size_t i = 0; i < n; ++i) {
    a.y.push_back(u(rng));
    a.w.push_back(u(rng) / static_cast<double>(n));
  }
  return a;
}

void BM_SturmSerial(benchmark::State& st) {
  const auto d = amo_diagonal(static_cast<std::size_t>(st.range(0)), 2.0);
  std::vector<double> x(256);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -6.0 + 12.0 * static_cast<double>(i) / 255.0;
  std::vector<int> out(x.size());
  for (auto _ : st) {
    k::sturm_counts_serial(d.data(), d.size(), x.data(), x.size(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_SturmBatched(benchmark::State& st) {
  const auto d = amo_diagonal(static_cast<std::size_t>(st.range(0)), 2.0);
  std::vector<double> x(256);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -6.0 + 12.0 * static_cast<double>(i) / 255.0;
  std::vector<int> out(x.size());
  for (auto _ : st) {
    k::sturm_counts_batched(d.data(), d.size(), x.data(), x.size(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_BisectSerial(benchmark::State& st) {
  const auto d = amo_diagonal(static_cast<std::size_t>(st.range(0)), 2.0);
  for (auto _ : st) benchmark::DoNotOptimize(k::bisect_eigenvalues_serial(d, 0, 128, 1e-12));
}

void BM_BisectParallel(benchmark::State& st) {
  const auto d = amo_diagonal(static_cast<std::size_t>(st.range(0)), 2.0);
  for (auto _ : st) benchmark::DoNotOptimize(k::bisect_eigenvalues_parallel(d, 0, 128, 1e-12));
}

void BM_MBorelSerial(benchmark::State& st) {
  const auto a = random_atoms(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(k::mborel_sum_serial(a.y.data(), a.w.data(), a.y.size(), 0.5, 1e-3, 2.0));
}

void BM_MBorelParallel(benchmark::State& st) {
  const auto a = random_atoms(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(k::mborel_sum_parallel(a.y.data(), a.w.data(), a.y.size(), 0.5, 1e-3, 2.0));
}

}  // namespace

BENCHMARK(BM_SturmSerial)->Arg(2001)->Arg(20001);
BENCHMARK(BM_SturmBatched)->Arg(2001)->Arg(20001);
BENCHMARK(BM_BisectSerial)->Arg(2001)->Arg(20001);
BENCHMARK(BM_BisectParallel)->Arg(2001)->Arg(20001);
BENCHMARK(BM_MBorelSerial)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_MBorelParallel)->Arg(100000)->Arg(1000000);

BENCHMARK_MAIN();

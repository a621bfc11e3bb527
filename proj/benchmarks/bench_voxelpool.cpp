#include <benchmark/benchmark.h>

#include "kanbev/voxelpool.hpp"

namespace {

using namespace kanbev::voxelpool;

const FeaturedPoints& points(std::size_t m, std::size_t c) {
  static FeaturedPoints cached;
  static std::size_t cached_m = 0, cached_c = 0;
  if (cached_m != m || cached_c != c) {
    cached = random_points(m, c, BevGridConfig{}, 42);
    cached_m = m;
    cached_c = c;
  }
  return cached;
}

void run(benchmark::State& state, PoolImpl impl) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const int workers = static_cast<int>(state.range(2));
  const auto& fp = points(m, c);
  const BevGridConfig grid;
  for (auto _ : state) {
    auto res = pool(impl, fp, grid, workers);
    benchmark::DoNotOptimize(res.grid.data.data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m));
}

void BM_PoolReference(benchmark::State& s) { run(s, PoolImpl::kReference); }
void BM_PoolCumsum(benchmark::State& s) { run(s, PoolImpl::kCumsum); }
void BM_PoolConcurrent(benchmark::State& s) { run(s, PoolImpl::kConcurrent); }

}  // namespace

BENCHMARK(BM_PoolReference)->Args({100'000, 64, 1})->Args({1'000'000, 64, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PoolCumsum)->Args({100'000, 64, 1})->Args({1'000'000, 64, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PoolConcurrent)
    ->Args({100'000, 64, 8})
    ->Args({1'000'000, 64, 1})
    ->Args({1'000'000, 64, 4})
    ->Args({1'000'000, 64, 8})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();

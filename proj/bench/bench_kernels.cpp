#include "dapes/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace dapes::kernels;

struct Maps
{
  std::vector<std::vector<std::uint64_t>> words;
  std::vector<const std::uint64_t*> ptrs;
};

Maps
randomMaps(std::size_t count, std::size_t nBits)
{
  std::mt19937_64 gen(42);
  Maps m;
  std::size_t nWords = (nBits + 63) / 64;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::uint64_t> w(nWords);
    for (auto& x : w)
      x = gen();
    if (nBits % 64)
      w.back() &= (std::uint64_t{1} << (nBits % 64)) - 1;
    m.words.push_back(std::move(w));
  }
  for (const auto& w : m.words)
    m.ptrs.push_back(w.data());
  return m;
}

template <auto Kernel>
void
rarity(benchmark::State& state)
{
  auto nBits = static_cast<std::size_t>(state.range(0));
  auto maps = randomMaps(static_cast<std::size_t>(state.range(1)), nBits);
  std::vector<std::uint32_t> out(nBits);
  for (auto _ : state) {
    Kernel(maps.ptrs, nBits, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <auto Kernel>
void
contention(benchmark::State& state)
{
  ContentionSetup setup;
  setup.slots = 16;
  setup.groups = 4;
  setup.slotDuration = 0.001;
  setup.peerGroups = {0, 1, 1, 2, 3, 3};
  auto trials = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    auto stats = Kernel(setup, trials, 7);
    benchmark::DoNotOptimize(stats.collisions);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(rarity<rarityCountSerial>)->Args({1000, 10})->Args({100000, 32})->Args({1000000, 64});
BENCHMARK(rarity<rarityCountParallel>)->Args({1000, 10})->Args({100000, 32})->Args({1000000, 64});
BENCHMARK(contention<contentionSerial>)->Arg(10000)->Arg(1000000);
BENCHMARK(contention<contentionParallel>)->Arg(10000)->Arg(1000000);

BENCHMARK_MAIN();

#include "dapes/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace dapes::kernels {

namespace {

inline void
countWord(std::span<const std::uint64_t* const> maps, std::size_t w, std::size_t nBits, std::uint32_t* out)
{
  std::size_t base = w * 64;
  std::size_t bits = std::min<std::size_t>(64, nBits - base);
  std::uint32_t* dst = out + base;
  for (std::size_t b = 0; b < bits; ++b)
    dst[b] = static_cast<std::uint32_t>(maps.size());
  for (const auto* map : maps) {
    std::uint64_t have = map[w];
    while (have != 0) {
      int b = __builtin_ctzll(have);
      if (static_cast<std::size_t>(b) < bits)
        --dst[b];
      have &= have - 1;
    }
  }
}

} // namespace

void
rarityCountSerial(std::span<const std::uint64_t* const> maps, std::size_t nBits, std::uint32_t* out)
{
  std::size_t words = (nBits + 63) / 64;
  for (std::size_t w = 0; w < words; ++w)
    countWord(maps, w, nBits, out);
}

void
rarityCountParallel(std::span<const std::uint64_t* const> maps, std::size_t nBits, std::uint32_t* out)
{
  auto words = static_cast<std::int64_t>((nBits + 63) / 64);
#pragma omp parallel for schedule(static)
  for (std::int64_t w = 0; w < words; ++w)
    countWord(maps, static_cast<std::size_t>(w), nBits, out);
}

void
rarityCount(std::span<const std::uint64_t* const> maps, std::size_t nBits, std::uint32_t* out)
{
  constexpr std::size_t kParallelThreshold = 1 << 20;
  if (nBits * (maps.size() + 1) >= kParallelThreshold && !omp_in_parallel() && omp_get_max_threads() > 1)
    rarityCountParallel(maps, nBits, out);
  else
    rarityCountSerial(maps, nBits, out);
}

int
maxThreads() noexcept
{
  return omp_get_max_threads();
}

void
runBatch(std::size_t n, int jobs, const std::function<void(std::size_t)>& task)
{
  if (jobs <= 0)
    jobs = omp_get_max_threads();
  auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::int64_t i = 0; i < count; ++i)
    task(static_cast<std::size_t>(i));
}

} // namespace dapes::kernels

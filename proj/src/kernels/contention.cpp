#include "dapes/common.hpp"
#include "dapes/kernels.hpp"

#include <omp.h>

namespace dapes::kernels {

namespace {

void
validate(const ContentionSetup& s)
{
  if (s.groups < 1 || s.slots < s.groups)
    throw DomainError("contention needs L >= k >= 1");
  for (auto g : s.peerGroups) {
    if (g >= s.groups)
      throw DomainError("peer group outside [0, k)");
  }
}

// slot draw for one (trial, peer); multiply-shift reduction of a hashed counter
inline unsigned
drawSlot(std::uint64_t seed, std::uint64_t trial, std::size_t peer, unsigned group, unsigned perGroup)
{
  std::uint64_t x = splitmix64(seed ^ splitmix64(trial * 0x100000001B3ULL + peer));
  auto offset = static_cast<unsigned>((static_cast<unsigned __int128>(x) * perGroup) >> 64);
  return group * perGroup + offset;
}

struct Partial
{
  std::uint64_t collisions = 0;
  std::vector<std::uint64_t> slotSum;
  std::vector<std::uint64_t> successes;
};

void
runTrials(const ContentionSetup& s, std::uint64_t seed, std::uint64_t begin, std::uint64_t end, Partial& p)
{
  const unsigned n = s.slots / s.groups;
  const std::size_t peers = s.peerGroups.size();
  std::vector<unsigned> slot(peers);
  std::vector<unsigned> occupancy(s.slots);
  for (std::uint64_t t = begin; t < end; ++t) {
    for (std::size_t i = 0; i < peers; ++i) {
      slot[i] = drawSlot(seed, t, i, s.peerGroups[i], n);
      ++occupancy[slot[i]];
    }
    for (std::size_t i = 0; i < peers; ++i) {
      p.slotSum[i] += slot[i];
      if (occupancy[slot[i]] == 1)
        ++p.successes[i];
      else
        ++p.collisions;
    }
    for (std::size_t i = 0; i < peers; ++i)
      occupancy[slot[i]] = 0;
  }
}

} // namespace

ContentionStats
contentionSerial(const ContentionSetup& setup, std::uint64_t trials, std::uint64_t seed)
{
  validate(setup);
  Partial p;
  p.slotSum.assign(setup.peerGroups.size(), 0);
  p.successes.assign(setup.peerGroups.size(), 0);
  runTrials(setup, seed, 0, trials, p);
  return {trials, p.collisions, setup.slotDuration, std::move(p.slotSum), std::move(p.successes)};
}

ContentionStats
contentionParallel(const ContentionSetup& setup, std::uint64_t trials, std::uint64_t seed)
{
  validate(setup);
  const std::size_t peers = setup.peerGroups.size();
  const int threads = omp_get_max_threads();
  std::vector<Partial> partials(static_cast<std::size_t>(threads));
  for (auto& p : partials) {
    p.slotSum.assign(peers, 0);
    p.successes.assign(peers, 0);
  }

  // fixed contiguous chunks so the reduction order is independent of scheduling
#pragma omp parallel num_threads(threads)
  {
    auto tid = static_cast<std::uint64_t>(omp_get_thread_num());
    auto nth = static_cast<std::uint64_t>(omp_get_num_threads());
    std::uint64_t begin = trials * tid / nth;
    std::uint64_t end = trials * (tid + 1) / nth;
    runTrials(setup, seed, begin, end, partials[tid]);
  }

  ContentionStats out{trials, 0, setup.slotDuration, std::vector<std::uint64_t>(peers, 0),
                      std::vector<std::uint64_t>(peers, 0)};
  for (const auto& p : partials) {
    out.collisions += p.collisions;
    for (std::size_t i = 0; i < peers; ++i) {
      out.slotSum[i] += p.slotSum[i];
      out.successes[i] += p.successes[i];
    }
  }
  return out;
}

} // namespace dapes::kernels

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dapes::kernels {

/// out[g] = number of maps whose bit g is clear, for g < nBits.  Each map
/// points at ceil(nBits/64) words, bit g in word g/64 at position g%64.
void
rarityCountSerial(std::span<const std::uint64_t* const> maps, std::size_t nBits, std::uint32_t* out);

/// Same result as the serial kernel, split over OpenMP threads by word.
void
rarityCountParallel(std::span<const std::uint64_t* const> maps, std::size_t nBits, std::uint32_t* out);

/// Picks the parallel kernel for large inputs when not already inside a
/// parallel region.
void
rarityCount(std::span<const std::uint64_t* const> maps, std::size_t nBits, std::uint32_t* out);

/// One contention round: every peer draws a slot uniformly inside its
/// priority group's slot range [j*n, (j+1)*n), n = floor(L/k).
struct ContentionSetup
{
  unsigned slots = 2;       ///< L
  unsigned groups = 1;      ///< k
  double slotDuration = 0;  ///< tau
  std::vector<unsigned> peerGroups;
};

struct ContentionStats
{
  std::uint64_t trials = 0;
  std::uint64_t collisions = 0; ///< peers sharing a slot with another peer
  double slotDuration = 0;
  std::vector<std::uint64_t> slotSum;   ///< per peer, chosen slot index summed over trials
  std::vector<std::uint64_t> successes; ///< per peer, trials with a private slot

  /// Mean slot start time of one peer.
  double
  meanDelay(std::size_t peer) const
  {
    return trials == 0 ? 0.0 : static_cast<double>(slotSum[peer]) / static_cast<double>(trials) * slotDuration;
  }
};

/// Trials are driven by a counter-based generator (trial index hashed with
/// the seed), so results do not depend on how trials are split up.
ContentionStats
contentionSerial(const ContentionSetup& setup, std::uint64_t trials, std::uint64_t seed);

ContentionStats
contentionParallel(const ContentionSetup& setup, std::uint64_t trials, std::uint64_t seed);

/// Runs task(i) for i in [0, n) on up to `jobs` threads (0 = OpenMP
/// default).  Tasks must write only to their own output slot.
void
runBatch(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

int
maxThreads() noexcept;

} // namespace dapes::kernels

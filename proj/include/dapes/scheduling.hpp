#pragma once

#include "dapes/common.hpp"

#include <cstdint>

namespace dapes {

/// window / (100 * share).  A peer holding everything still missing fires
/// after window/100.  Throws DomainError unless 0 < share <= 1.
double
bitmapTimerLinear(double window, double shareFraction);

/// Per-encounter collision-recovery state.  Each collision doubles the slot
/// count: L = 2^round, so the first collision gives two slots.
struct PebaState
{
  unsigned round = 0;
  unsigned groups = 2; ///< k
  double slotDuration = 0.001;

  unsigned
  slots() const noexcept
  {
    return 1U << round;
  }

  void
  onCollision() noexcept
  {
    if (round < 16)
      ++round;
  }

  void
  reset() noexcept
  {
    round = 0;
  }
};

/// Priority group for a peer contributing `contribution` of `reference`
/// missing packets: group j = k-1-floor(k*contribution/reference), clamped
/// to [0, k).  With k = 2 this is group 0 iff contribution >= reference/2.
unsigned
pebaGroup(unsigned groups, std::uint64_t contribution, std::uint64_t reference);

/// Slot index uniform in the peer's group range [j*n, (j+1)*n),
/// n = floor(L/k).  Throws DomainError when L < k or k == 0.
unsigned
pebaAssignSlot(const PebaState& st, std::uint64_t myMissingContribution, std::uint64_t maxMissingContribution,
               Rng& rng);

/// n = floor(L/k), L_avg = (n-1)/2, T = ((L_avg-1)/2) * tau, clamped at 0.
double
expectedTransmitDelay(unsigned slots, unsigned groups, double tau);

enum class ExchangeMode { BitmapsFirst, Interleaved };

/// Time left for data after b bitmap exchanges of (tDelay + d) each.
double
dataFetchTime(double deltaT, double tDelay, double d, std::uint64_t b, ExchangeMode mode);

} // namespace dapes

#include "dapes/scheduling.hpp"

#include <cmath>
#include <string>

namespace dapes {

double
bitmapTimerLinear(double window, double shareFraction)
{
  if (!(shareFraction > 0.0) || shareFraction > 1.0)
    throw DomainError("share fraction must be in (0, 1], got " + std::to_string(shareFraction));
  if (window < 0)
    throw DomainError("negative transmission window");
  return window / (100.0 * shareFraction);
}

unsigned
pebaGroup(unsigned groups, std::uint64_t contribution, std::uint64_t reference)
{
  if (groups == 0)
    throw DomainError("group count must be positive");
  if (reference == 0)
    return groups - 1;
  std::uint64_t level = contribution * groups / reference;
  if (level >= groups)
    return 0;
  return groups - 1 - static_cast<unsigned>(level);
}

unsigned
pebaAssignSlot(const PebaState& st, std::uint64_t myMissingContribution, std::uint64_t maxMissingContribution,
               Rng& rng)
{
  unsigned slots = st.slots();
  if (st.groups == 0 || slots < st.groups)
    throw DomainError("PEBA needs L >= k >= 1 (L=" + std::to_string(slots) + ", k=" + std::to_string(st.groups) +
                      ")");
  unsigned n = slots / st.groups;
  unsigned j = pebaGroup(st.groups, myMissingContribution, maxMissingContribution);
  return j * n + static_cast<unsigned>(rng.uniformInt(0, n - 1));
}

double
expectedTransmitDelay(unsigned slots, unsigned groups, double tau)
{
  if (groups == 0 || slots < groups)
    throw DomainError("expected delay needs L >= k >= 1");
  if (tau < 0)
    throw DomainError("negative slot duration");
  double n = std::floor(static_cast<double>(slots) / groups);
  double lAvg = (n - 1.0) / 2.0;
  double t = (lAvg - 1.0) / 2.0 * tau;
  return t > 0.0 ? t : 0.0;
}

double
dataFetchTime(double deltaT, double tDelay, double d, std::uint64_t b, ExchangeMode mode)
{
  if (deltaT < 0 || tDelay < 0 || d < 0)
    throw DomainError("fetch-time arguments must be nonnegative");
  double per = tDelay + d;
  double spent = per * static_cast<double>(b);
  if (mode == ExchangeMode::BitmapsFirst)
    return spent < deltaT ? deltaT - spent : 0.0;

  if (per > 0 && static_cast<double>(b) > std::floor(deltaT / per))
    throw DomainError("interleaved exchange needs b <= floor(deltaT / (tDelay + d))");
  return per < deltaT ? deltaT - spent : 0.0;
}

} // namespace dapes

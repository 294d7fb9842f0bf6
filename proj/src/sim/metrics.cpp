#include "dapes/sim.hpp"

#include <algorithm>
#include <numeric>

namespace dapes::sim {

std::uint64_t
NodeMetrics::totalTx() const noexcept
{
  return std::accumulate(tx.begin(), tx.end(), std::uint64_t{0});
}

std::uint64_t
RunReport::totalTransmissions() const noexcept
{
  std::uint64_t n = 0;
  for (const auto& m : nodes)
    n += m.totalTx();
  return n;
}

std::array<std::uint64_t, kTxCategories>
RunReport::txByCategory() const noexcept
{
  std::array<std::uint64_t, kTxCategories> out{};
  for (const auto& m : nodes)
    for (std::size_t c = 0; c < kTxCategories; ++c)
      out[c] += m.tx[c];
  return out;
}

std::uint64_t
RunReport::totalCollisions() const noexcept
{
  std::uint64_t n = 0;
  for (const auto& m : nodes)
    n += m.collisionsObserved;
  return n;
}

double
RunReport::forwardSuccessRatio() const noexcept
{
  std::uint64_t done = 0;
  std::uint64_t ok = 0;
  for (const auto& m : nodes) {
    done += m.forwardsCompleted;
    ok += m.forwardsSatisfied;
  }
  return done == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(done);
}

std::vector<double>
RunReport::downloadTimes() const
{
  std::vector<double> out;
  for (const auto& m : nodes) {
    if (m.role == NodeRole::Downloader)
      out.push_back(m.completionTime.value_or(maxSimTime));
  }
  return out;
}

double
RunReport::meanDownloadTime() const
{
  auto t = downloadTimes();
  if (t.empty())
    return 0;
  return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
}

double
RunReport::medianDownloadTime() const
{
  auto t = downloadTimes();
  if (t.empty())
    return 0;
  std::sort(t.begin(), t.end());
  auto n = t.size();
  return n % 2 ? t[n / 2] : (t[n / 2 - 1] + t[n / 2]) / 2;
}

std::size_t
RunReport::completedDownloaders() const noexcept
{
  std::size_t n = 0;
  for (const auto& m : nodes)
    n += (m.role == NodeRole::Downloader && m.completionTime) ? 1 : 0;
  return n;
}

} // namespace dapes::sim

#include "dapes/advertisement.hpp"
#include "dapes/kernels.hpp"
#include "dapes/tlv.hpp"

#include <bit>
#include <cmath>

namespace dapes {

Bitmap::Bitmap(std::size_t length)
  : m_words((length + 63) / 64, 0)
  , m_size(length)
{
}

void
Bitmap::check(std::size_t g) const
{
  if (g >= m_size)
    throw IndexOutOfRange("bit " + std::to_string(g) + " >= " + std::to_string(m_size));
}

bool
Bitmap::test(std::size_t g) const
{
  check(g);
  return (m_words[g / 64] >> (g % 64)) & 1U;
}

bool
Bitmap::set(std::size_t g)
{
  check(g);
  auto& w = m_words[g / 64];
  auto mask = std::uint64_t{1} << (g % 64);
  if (w & mask)
    return false;
  w |= mask;
  ++m_have;
  return true;
}

bool
Bitmap::reset(std::size_t g)
{
  check(g);
  auto& w = m_words[g / 64];
  auto mask = std::uint64_t{1} << (g % 64);
  if (!(w & mask))
    return false;
  w &= ~mask;
  --m_have;
  return true;
}

void
Bitmap::setAll()
{
  for (auto& w : m_words)
    w = ~std::uint64_t{0};
  if (m_size % 64 != 0 && !m_words.empty())
    m_words.back() = (std::uint64_t{1} << (m_size % 64)) - 1;
  m_have = m_size;
}

void
Bitmap::unite(const Bitmap& other)
{
  if (other.m_size != m_size)
    throw LengthMismatch("bitmap lengths differ");
  m_have = 0;
  for (std::size_t i = 0; i < m_words.size(); ++i) {
    m_words[i] |= other.m_words[i];
    m_have += static_cast<std::size_t>(std::popcount(m_words[i]));
  }
}

std::size_t
Bitmap::countNotIn(const Bitmap& other) const
{
  if (other.m_size != m_size)
    throw LengthMismatch("bitmap lengths differ");
  std::size_t n = 0;
  for (std::size_t i = 0; i < m_words.size(); ++i)
    n += static_cast<std::size_t>(std::popcount(m_words[i] & ~other.m_words[i]));
  return n;
}

Bytes
Bitmap::encode() const
{
  Bytes bits((m_size + 7) / 8, 0);
  for (std::size_t g = 0; g < m_size; ++g) {
    if ((m_words[g / 64] >> (g % 64)) & 1U)
      bits[g / 8] |= static_cast<std::uint8_t>(0x80 >> (g % 8));
  }
  Bytes out;
  tlv::appendNonNegativeInteger(out, tlv::BitmapLength, m_size);
  tlv::appendElement(out, tlv::Bitmap, bits);
  return out;
}

Bitmap
Bitmap::decode(std::span<const std::uint8_t> wire)
{
  tlv::Reader r(wire);
  auto lenView = r.expect(tlv::BitmapLength);
  auto n = tlv::readNonNegativeInteger(lenView.value, lenView.valueOffset);
  auto bitsView = r.expect(tlv::Bitmap);
  if (bitsView.value.size() != (n + 7) / 8)
    throw tlv::CodecError(bitsView.valueOffset, "bitmap length does not match bit count");
  if (!r.atEnd())
    throw tlv::CodecError(r.offset(), "trailing bytes after bitmap");

  Bitmap b(static_cast<std::size_t>(n));
  for (std::size_t g = 0; g < n; ++g) {
    if (bitsView.value[g / 8] & (0x80 >> (g % 8)))
      b.set(g);
  }
  if (n % 8 != 0 && (bitsView.value.back() & (0xFF >> (n % 8))) != 0)
    throw tlv::CodecError(bitsView.valueOffset + bitsView.value.size() - 1, "nonzero bitmap padding");
  return b;
}

Bitmap
bitmapFromMetadata(const CollectionMetadata& md)
{
  return Bitmap(static_cast<std::size_t>(md.totalPackets()));
}

RarityVector
rarityLocal(const Bitmap& own, std::span<const Bitmap* const> neighbors)
{
  std::vector<const std::uint64_t*> maps;
  maps.reserve(neighbors.size() + 1);
  maps.push_back(own.words().data());
  for (const auto* b : neighbors) {
    if (b->size() != own.size())
      throw LengthMismatch("neighbor bitmap has " + std::to_string(b->size()) + " bits, own has " +
                           std::to_string(own.size()));
    maps.push_back(b->words().data());
  }
  RarityVector out(own.size());
  kernels::rarityCount(maps, own.size(), out.data());
  return out;
}

RarityVector
rarityLocal(const Bitmap& own, const std::vector<Bitmap>& neighbors)
{
  std::vector<const Bitmap*> ptrs;
  ptrs.reserve(neighbors.size());
  for (const auto& b : neighbors)
    ptrs.push_back(&b);
  return rarityLocal(own, ptrs);
}

EncounterHistory::EncounterHistory(std::size_t capacity)
  : m_capacity(capacity)
{
  if (capacity == 0)
    throw std::invalid_argument("encounter history capacity must be positive");
}

void
EncounterHistory::record(std::uint64_t peerId, Bitmap bitmap, double time)
{
  for (auto it = m_entries.begin(); it != m_entries.end(); ++it) {
    if (it->peerId == peerId) {
      m_entries.erase(it);
      break;
    }
  }
  m_entries.push_back({peerId, std::move(bitmap), time});
  while (m_entries.size() > m_capacity)
    m_entries.pop_front();
}

RarityVector
rarityEncounter(const Bitmap& own, const EncounterHistory& history)
{
  std::vector<const Bitmap*> ptrs;
  ptrs.reserve(history.size());
  for (const auto& e : history.entries())
    ptrs.push_back(&e.bitmap);
  return rarityLocal(own, ptrs);
}

std::optional<std::uint64_t>
nextRequest(const Bitmap& own, const RarityVector& rarity, const Bitmap& exclude, Rng& rng, bool randomStart)
{
  if (rarity.size() != own.size() || exclude.size() != own.size())
    throw LengthMismatch("rarity/exclude length differs from bitmap");

  const auto& ow = own.words();
  const auto& ex = exclude.words();
  std::uint32_t best = 0;
  std::vector<std::uint64_t> tied;
  bool found = false;
  for (std::size_t w = 0; w < ow.size(); ++w) {
    std::uint64_t cand = ~(ow[w] | ex[w]);
    if (w + 1 == ow.size() && own.size() % 64 != 0)
      cand &= (std::uint64_t{1} << (own.size() % 64)) - 1;
    while (cand != 0) {
      std::size_t g = w * 64 + static_cast<std::size_t>(std::countr_zero(cand));
      cand &= cand - 1;
      std::uint32_t r = rarity[g];
      if (!found || r > best) {
        found = true;
        best = r;
        tied.clear();
        tied.push_back(g);
      }
      else if (r == best && randomStart) {
        tied.push_back(g);
      }
    }
  }
  if (!found)
    return std::nullopt;
  if (!randomStart || tied.size() == 1)
    return tied.front();
  return tied[rng.uniformInt(0, tied.size() - 1)];
}

std::optional<std::uint64_t>
nextRequest(const Bitmap& own, const RarityVector& rarity, const std::set<std::uint64_t>& inFlight, Rng& rng,
            bool randomStart)
{
  Bitmap exclude(own.size());
  for (auto g : inFlight) {
    if (g < own.size())
      exclude.set(g);
  }
  return nextRequest(own, rarity, exclude, rng, randomStart);
}

double
rpfEffectiveness(std::uint64_t nPackets, std::uint64_t connectedPeers)
{
  if (nPackets < 2)
    throw DomainError("effectiveness needs at least 2 packets");
  if (connectedPeers == 0)
    return 0.0;
  double n = static_cast<double>(nPackets);
  return 1.0 - std::pow(std::log(n) / n, static_cast<double>(connectedPeers));
}

} // namespace dapes

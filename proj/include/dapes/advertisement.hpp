#pragma once

#include "dapes/collection.hpp"
#include "dapes/common.hpp"

#include <deque>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace dapes {

/// One bit per collection packet in canonical global order (1 = have).
class Bitmap
{
public:
  Bitmap() = default;
  explicit Bitmap(std::size_t length);

  std::size_t
  size() const noexcept
  {
    return m_size;
  }

  std::size_t
  haveCount() const noexcept
  {
    return m_have;
  }

  bool
  full() const noexcept
  {
    return m_have == m_size;
  }

  bool
  test(std::size_t g) const;

  /// Returns true if the bit was newly set.
  bool
  set(std::size_t g);

  bool
  reset(std::size_t g);

  void
  setAll();

  /// this |= other
  void
  unite(const Bitmap& other);

  /// |this & ~other|
  std::size_t
  countNotIn(const Bitmap& other) const;

  const std::vector<std::uint64_t>&
  words() const noexcept
  {
    return m_words;
  }

  /// BitmapLength element (bit count) followed by a Bitmap element holding
  /// ceil(n/8) bytes; bit g is bit (7 - g%8) of byte g/8, padding zero.
  Bytes
  encode() const;

  /// Throws tlv::CodecError on malformed input or nonzero padding.
  static Bitmap
  decode(std::span<const std::uint8_t> wire);

  friend bool
  operator==(const Bitmap& a, const Bitmap& b) noexcept
  {
    return a.m_size == b.m_size && a.m_words == b.m_words;
  }

private:
  void
  check(std::size_t g) const;

  std::vector<std::uint64_t> m_words;
  std::size_t m_size = 0;
  std::size_t m_have = 0;
};

Bitmap
bitmapFromMetadata(const CollectionMetadata& md);

/// Number of surveyed bitmaps missing each packet.
using RarityVector = std::vector<std::uint32_t>;

/// Survey of the own bitmap plus current neighbors.  Throws LengthMismatch.
RarityVector
rarityLocal(const Bitmap& own, std::span<const Bitmap* const> neighbors);

RarityVector
rarityLocal(const Bitmap& own, const std::vector<Bitmap>& neighbors);

/// Bounded record of bitmaps from past encounters, one entry per peer.
class EncounterHistory
{
public:
  struct Entry
  {
    std::uint64_t peerId;
    Bitmap bitmap;
    double time;
  };

  explicit EncounterHistory(std::size_t capacity = 20);

  /// Replaces an existing entry for the peer, otherwise appends and evicts
  /// the oldest entry beyond capacity.
  void
  record(std::uint64_t peerId, Bitmap bitmap, double time);

  std::size_t
  size() const noexcept
  {
    return m_entries.size();
  }

  std::size_t
  capacity() const noexcept
  {
    return m_capacity;
  }

  const std::deque<Entry>&
  entries() const noexcept
  {
    return m_entries;
  }

  void
  clear()
  {
    m_entries.clear();
  }

private:
  std::size_t m_capacity;
  std::deque<Entry> m_entries;
};

RarityVector
rarityEncounter(const Bitmap& own, const EncounterHistory& history);

enum class RpfStrategy { Local, Encounter };

/// Highest-rarity index that is missing from `own` and not excluded.  Ties
/// go to the lowest index, or to a uniform draw among the tied maxima when
/// randomStart is set; the rng is drawn only when several indices tie.
std::optional<std::uint64_t>
nextRequest(const Bitmap& own, const RarityVector& rarity, const Bitmap& exclude, Rng& rng, bool randomStart);

std::optional<std::uint64_t>
nextRequest(const Bitmap& own, const RarityVector& rarity, const std::set<std::uint64_t>& inFlight, Rng& rng,
            bool randomStart);

/// 1 - (ln N / N)^k, or 0 when k == 0.  Throws DomainError for N < 2.
double
rpfEffectiveness(std::uint64_t nPackets, std::uint64_t connectedPeers);

} // namespace dapes

#pragma once

#include "dapes/common.hpp"
#include "dapes/packet.hpp"

#include <functional>
#include <list>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

namespace dapes {

using FaceId = std::uint32_t;

/// Conventional faces of a wireless node.
inline constexpr FaceId kAppFace = 0;
inline constexpr FaceId kRadioFace = 1;

/// Exact-match packet cache with least-recently-used eviction.
class ContentStore
{
public:
  explicit ContentStore(std::size_t capacity = 10000);

  /// Inserting an existing name refreshes the entry and its recency.
  void
  insert(PacketPtr data);

  /// Hit refreshes recency.
  PacketPtr
  find(const Name& name);

  bool
  contains(const Name& name) const
  {
    return m_index.count(name) > 0;
  }

  std::size_t
  size() const noexcept
  {
    return m_index.size();
  }

  std::size_t
  capacity() const noexcept
  {
    return m_capacity;
  }

  /// Visits cached packets from most to least recently used.
  void
  forEach(const std::function<void(const PacketPtr&)>& fn) const;

private:
  std::size_t m_capacity;
  std::list<PacketPtr> m_lru;
  std::unordered_map<Name, std::list<PacketPtr>::iterator, NameHash> m_index;
};

struct PitEntry
{
  Name name;
  std::set<FaceId> inFaces;
  double expiry = 0;
  bool forwarded = false;     ///< sent upstream on behalf of inFaces
  double forwardTime = 0;
  bool trackFailure = false;  ///< install a suppression timer if unanswered
};

class Pit
{
public:
  PitEntry*
  find(const Name& name);

  PitEntry&
  insert(const Name& name, double expiry);

  void
  erase(const Name& name)
  {
    m_entries.erase(name);
  }

  std::size_t
  size() const noexcept
  {
    return m_entries.size();
  }

  std::unordered_map<Name, PitEntry, NameHash>&
  entries() noexcept
  {
    return m_entries;
  }

private:
  std::unordered_map<Name, PitEntry, NameHash> m_entries;
};

struct FibEntry
{
  Name prefix;
  std::set<FaceId> faces;
};

class Fib
{
public:
  /// Adds faces to the entry for `prefix`, creating it if absent.
  void
  insert(const Name& prefix, FaceId face);

  void
  erase(const Name& prefix);

  /// Entry with the longest prefix of `name`, or nullptr.
  const FibEntry*
  longestPrefixMatch(const Name& name) const;

  std::size_t
  size() const noexcept
  {
    return m_entries.size();
  }

private:
  std::unordered_map<Name, FibEntry, NameHash> m_entries;
};

class SuppressionTable
{
public:
  void
  install(const Name& name, double expiry);

  bool
  isSuppressed(const Name& name, double now) const;

  void
  purge(double now);

  std::size_t
  size() const noexcept
  {
    return m_timers.size();
  }

private:
  std::unordered_map<Name, double, NameHash> m_timers;
};

struct ForwarderConfig
{
  std::size_t csCapacity = 10000;
  double pitLifetime = 2.0;
  double suppressDuration = 5.0;
  double fwdJitterMax = 0.020;
};

/// Outcome of a role policy for an Interest that missed CS and PIT.
struct Decision
{
  enum Kind { Forward, Suppress, DeliverToApp } kind = Suppress;
  double delay = 0;
  bool trackFailure = false;

  static Decision
  forward(double delay, bool trackFailure = false)
  {
    return {Forward, delay, trackFailure};
  }

  static Decision
  suppress()
  {
    return {Suppress, 0, false};
  }

  static Decision
  deliver()
  {
    return {DeliverToApp, 0, false};
  }
};

struct Action
{
  enum Kind { SendInterest, SendData, DeliverToApp } kind;
  FaceId face = kRadioFace;
  PacketPtr packet;
  double delay = 0;
};

struct ForwarderCounters
{
  std::uint64_t interestsIn = 0;
  std::uint64_t dataIn = 0;
  std::uint64_t interestsForwarded = 0; ///< Forward actions issued
  std::uint64_t dataSent = 0;           ///< SendData actions issued
  std::uint64_t cacheHits = 0;
  std::uint64_t aggregated = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t suppressed = 0;
  std::uint64_t forwardsCompleted = 0;  ///< markForwarded calls
  std::uint64_t forwardsSatisfied = 0;  ///< of those, answered by Data
  std::uint64_t suppressionTimers = 0;
};

/// Role policy consulted after CS and PIT miss.
using InterestPolicy = std::function<Decision(const Packet& interest, FaceId inFace, double now)>;

/// CS / PIT / FIB pipeline of one node.
///
/// Interests arriving on the radio with hop limit <= 1 are local-scope:
/// they skip CS and PIT and go straight to the application.  A Data that
/// arrives on the face it is destined for is sent back out only when this
/// node forwarded the Interest (broadcast face semantics).
class Forwarder
{
public:
  explicit Forwarder(ForwarderConfig config = {});

  const ForwarderConfig&
  config() const noexcept
  {
    return m_config;
  }

  std::vector<Action>
  onInterest(const PacketPtr& interest, FaceId inFace, double now, const InterestPolicy& policy);

  std::vector<Action>
  onData(const PacketPtr& data, FaceId inFace, double now, bool cacheable = true);

  /// Called when a Forward action is actually transmitted.
  void
  markForwarded(const Name& name, double now);

  /// A pending Forward was abandoned (e.g. Data overheard); the PIT entry
  /// stays so the Data can still be delivered.
  void
  cancelForward(const Name& name);

  /// Pure-forwarder policy: suppression check, then Forward with
  /// probability pFwd after a uniform delay in [0, fwdJitterMax].
  Decision
  pureForwardDecide(const Packet& interest, double now, double pFwd, Rng& rng);

  /// Expires PIT entries and installs suppression timers for unanswered
  /// tracked forwards.  Runs lazily per name and periodically in bulk.
  void
  purge(double now);

  ContentStore&
  cs() noexcept
  {
    return m_cs;
  }

  Pit&
  pit() noexcept
  {
    return m_pit;
  }

  Fib&
  fib() noexcept
  {
    return m_fib;
  }

  SuppressionTable&
  suppression() noexcept
  {
    return m_suppression;
  }

  const ForwarderCounters&
  counters() const noexcept
  {
    return m_counters;
  }

private:
  bool
  isDuplicate(const Packet& interest, double now);

  /// Returns the live entry for name, expiring a stale one first.
  PitEntry*
  livePit(const Name& name, double now);

  void
  expire(const PitEntry& entry);

  void
  maybePurge(double now);

  struct NonceKey
  {
    Name name;
    std::uint32_t nonce;
    friend bool
    operator==(const NonceKey&, const NonceKey&) = default;
  };

  struct NonceKeyHash
  {
    std::size_t
    operator()(const NonceKey& k) const noexcept
    {
      return NameHash{}(k.name) * 31 + k.nonce;
    }
  };

  ForwarderConfig m_config;
  ContentStore m_cs;
  Pit m_pit;
  Fib m_fib;
  SuppressionTable m_suppression;
  std::unordered_map<NonceKey, double, NonceKeyHash> m_nonces;
  ForwarderCounters m_counters;
  std::uint64_t m_ops = 0;
};

} // namespace dapes

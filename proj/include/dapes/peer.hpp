#pragma once

#include "dapes/advertisement.hpp"
#include "dapes/collection.hpp"
#include "dapes/forwarder.hpp"
#include "dapes/scheduling.hpp"

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>

namespace dapes {

struct PeerConfig
{
  ExchangeMode exchangeMode = ExchangeMode::Interleaved;
  /// Bitmaps to hear per encounter before data-only fetching.  A value
  /// larger than the neighborhood means "all bitmaps".
  unsigned bitmapsTarget = 3;
  RpfStrategy strategy = RpfStrategy::Local;
  bool randomStart = true;
  double discoveryPeriodMin = 1.0;
  double discoveryPeriodMax = 4.0;
  unsigned pipelineDepth = 4;
  double forwardProbNoKnowledge = 0.2;
  double window = 0.020;
  bool peba = true;
  unsigned pebaGroups = 2;
  double slotDuration = 0.001;
  double knowledgeTtl = 10.0;
  double encounterTimeout = 3.0;
  std::size_t historyCapacity = 20;
  unsigned maxAttempts = 5;
  unsigned maxBitmapAttempts = 8;
  double bitmapPhaseTimeout = 1.0;
  double requestJitterMax = 0.005;
  double pitLifetime = 2.0;
  double fwdJitterMax = 0.020;

  /// Throws std::invalid_argument naming the offending field.
  void
  validate() const;
};

using TimerId = std::uint64_t;

/// What a peer needs from the node it runs on.
class PeerHost
{
public:
  virtual ~PeerHost() = default;

  virtual double
  now() const = 0;

  virtual Rng&
  rng() = 0;

  virtual TimerId
  schedule(double delay, std::function<void()> fn) = 0;

  virtual void
  cancel(TimerId id) = 0;

  /// Interests with hop limit 1 are broadcast directly; others go through
  /// the forwarder from the application face.  Dropped if an identical
  /// Interest is overheard before the delay elapses.
  virtual void
  sendInterest(PacketPtr interest, double delay) = 0;

  /// Solicited Data goes through the forwarder (consuming PIT state);
  /// unsolicited Data is broadcast directly.  Dropped if identical Data is
  /// overheard before the delay elapses.
  virtual void
  sendData(PacketPtr data, double delay, bool solicited) = 0;

  virtual Forwarder&
  forwarder() = 0;

  virtual void
  trace(const std::string& kind, const Name& name, const std::string& detail) = 0;

  virtual void
  onDownloadComplete() = 0;
};

enum class PeerRole { Repo, Downloader, Intermediate };

struct PeerCounters
{
  std::uint64_t signatureFailures = 0;
  std::uint64_t metadataParseFailures = 0;
  std::uint64_t rejectedPackets = 0;
  std::uint64_t duplicatePackets = 0;
  std::uint64_t absorbedOverheard = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t epochs = 0;
  std::uint64_t bitmapsSent = 0;
  std::uint64_t bitmapsHeard = 0;
  std::uint64_t bitmapCollisions = 0;
  std::uint64_t dataRequests = 0;
  std::uint64_t probeRequests = 0; ///< requests with no known holder nearby
  std::uint64_t forwardKnowledge = 0;
  std::uint64_t forwardBlind = 0;
  std::uint64_t suppressKnowledge = 0;
  std::uint64_t suppressBlind = 0;
};

/// Names used by the protocol.
Name
discoveryPrefix();

Name
bitmapName(const Name& collection, std::uint64_t peerId);

/// `<collection>` of a packet, metadata or bitmap name (last two
/// components removed).  Empty for names with fewer than three components.
Name
collectionOf(const Name& name);

bool
isDiscoveryName(const Name& name);

bool
isBitmapName(const Name& name);

bool
isMetadataName(const Name& name);

Bytes
encodeDiscoveryParams(std::uint64_t peerId);

std::uint64_t
decodeDiscoveryParams(std::span<const std::uint8_t> payload);

Bytes
encodeDiscoveryContent(std::uint64_t peerId, const std::vector<Name>& metadataNames);

std::pair<std::uint64_t, std::vector<Name>>
decodeDiscoveryContent(std::span<const std::uint8_t> payload);

/// The DAPES application of one node: discovery, metadata retrieval, bitmap
/// exchange with prioritized timers and PEBA, rarest-first fetching, and
/// the knowledge-based forwarding policy.
class Peer
{
public:
  struct Neighbor
  {
    double lastHeard = -std::numeric_limits<double>::infinity();
    std::set<Name> collections; ///< metadata prefixes listed in discovery
    struct Advert
    {
      Bitmap bitmap;
      double time;
    };
    std::map<Name, Advert> bitmaps;
  };

  /// Downloader or intermediate interested in `wanted`.
  Peer(PeerHost& host, std::uint64_t peerId, PeerRole role, PeerConfig config, Name wanted,
       std::shared_ptr<const TrustStore> trust, std::shared_ptr<const Signer> signer);

  /// Repository: starts with the complete collection.
  Peer(PeerHost& host, std::uint64_t peerId, PeerConfig config, std::shared_ptr<const Collection> collection,
       CollectionMetadata metadata, std::vector<PacketPtr> metadataSegments,
       std::shared_ptr<const TrustStore> trust, std::shared_ptr<const Signer> signer);

  ~Peer();

  Peer(const Peer&) = delete;
  Peer&
  operator=(const Peer&) = delete;

  void
  start();

  /// Downloader that already holds the signed metadata (obtained earlier).
  /// Verified like fetched metadata; installed on start().  False when rejected.
  bool
  preloadMetadata(const CollectionMetadata& md, std::vector<PacketPtr> segments);

  /// Forwarding policy for radio Interests that missed CS and PIT.
  Decision
  decide(const Packet& interest, double now);

  /// Interest delivered by the forwarder (local scope or DeliverToApp).
  void
  onInterest(const PacketPtr& interest);

  /// Every Data received over the radio, solicited or overheard.
  void
  onData(const PacketPtr& data);

  /// Result of one of this peer's own transmissions.
  void
  onTransmitted(const Packet& packet, bool collided);

  /// A reception at this node was corrupted by overlapping transmissions.
  void
  onCollisionObserved();

  std::uint64_t
  peerId() const noexcept
  {
    return m_peerId;
  }

  PeerRole
  role() const noexcept
  {
    return m_role;
  }

  bool
  complete() const;

  bool
  hasMetadata() const;

  /// Own bitmap of the wanted collection; empty before metadata arrives.
  const Bitmap&
  ownBitmap() const;

  std::optional<double>
  completionTime() const noexcept
  {
    return m_completionTime;
  }

  double
  discoveryPeriod() const noexcept
  {
    return m_discoveryPeriod;
  }

  const std::map<std::uint64_t, Neighbor>&
  neighbors() const noexcept
  {
    return m_neighbors;
  }

  const PeerCounters&
  counters() const noexcept
  {
    return m_counters;
  }

  const PeerConfig&
  config() const noexcept
  {
    return m_config;
  }

  /// Reassembled content of one file (empty unless held).
  Bytes
  fileContent(std::size_t fileIndex) const;

  /// Packets currently requested and unanswered.
  std::size_t
  inFlightCount() const;

  /// Bitmaps heard in the current encounter.
  std::size_t
  bitmapsHeardThisEncounter() const;

private:
  struct Session;

  // discovery
  void
  onDiscoveryTimer();

  void
  onDiscoveryInterest(const Packet& interest);

  void
  onDiscoveryData(const Packet& data);

  void
  heard(std::uint64_t peerId);

  bool
  isFresh(const Neighbor& n, double now) const;

  bool
  inCollection(const Neighbor& n) const;

  // metadata
  void
  maybeFetchMetadata();

  void
  requestMetadataSegment(std::uint64_t seq);

  void
  onMetadataSegment(const PacketPtr& data);

  void
  installMetadata(CollectionMetadata md, std::vector<PacketPtr> segments);

  // bitmaps
  void
  startEpoch();

  void
  onBitmap(std::uint64_t from, const Name& collection, Bitmap bitmap, bool isInterest);

  void
  scheduleAdvert();

  void
  scheduleAdvertAfterCollision();

  void
  sendAdvert(bool asInterest);

  void
  updateGate();

  // data
  void
  fillPipeline();

  bool
  requestOne();

  void
  onRequestTimeout(std::uint64_t g);

  void
  absorb(const PacketPtr& data);

  void
  accept(std::uint64_t g, const PacketPtr& data);

  void
  refreshRarity();

  void
  answer(const Packet& interest);

  PacketPtr
  makeSignedData(Name name, Bytes content) const;

  PeerHost& m_host;
  std::uint64_t m_peerId;
  PeerRole m_role;
  PeerConfig m_config;
  Name m_wanted;
  std::shared_ptr<const TrustStore> m_trust;
  std::shared_ptr<const Signer> m_signer;

  std::map<std::uint64_t, Neighbor> m_neighbors;
  std::map<Name, double> m_seenNearby;
  double m_discoveryPeriod;
  double m_lastNeighborHeard = -std::numeric_limits<double>::infinity();
  double m_lastDiscoveryTick = 0;
  bool m_discoveryReplyPending = false;
  bool m_metadataFailed = false;
  std::optional<std::pair<CollectionMetadata, std::vector<PacketPtr>>> m_preloaded;

  std::unique_ptr<Session> m_session;
  std::optional<double> m_completionTime;
  PeerCounters m_counters;
};

} // namespace dapes

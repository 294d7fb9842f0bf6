#pragma once

#include "dapes/peer.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

namespace dapes::sim {

class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Event scheduler

/// Min-heap of (time, seq).  Equal-time events run in insertion order.
class Scheduler
{
public:
  double
  now() const noexcept
  {
    return m_now;
  }

  /// Throws DomainError if time < now.
  TimerId
  at(double time, std::function<void()> fn);

  TimerId
  after(double delay, std::function<void()> fn)
  {
    return at(m_now + delay, std::move(fn));
  }

  void
  cancel(TimerId id)
  {
    m_live.erase(id);
  }

  bool
  isPending(TimerId id) const
  {
    return m_live.count(id) > 0;
  }

  /// Runs the next live event.  False when nothing is left.
  bool
  runNext();

  /// Time of the next live event, if any.
  std::optional<double>
  peekTime();

  std::uint64_t
  executed() const noexcept
  {
    return m_executed;
  }

private:
  struct Entry
  {
    double time;
    std::uint64_t seq;

    bool
    operator>(const Entry& o) const noexcept
    {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> m_heap;
  std::unordered_map<std::uint64_t, std::function<void()>> m_live;
  double m_now = 0;
  std::uint64_t m_seq = 0;
  std::uint64_t m_executed = 0;
};

// ---------------------------------------------------------------------------
// Geometry and mobility

struct Vec2
{
  double x = 0;
  double y = 0;
};

double
distance(Vec2 a, Vec2 b) noexcept;

struct MobilityParams
{
  double arenaWidth = 500;
  double arenaHeight = 500;
  double speedMin = 2;
  double speedMax = 10;
  double redrawPeriod = 10;
  double tick = 0.1;
};

struct MobileState
{
  Vec2 pos;
  double speed = 0;
  double heading = 0;
  double nextRedraw = 0;
  bool mobile = false;
};

/// Random direction with reflection at the arena walls.
class Mobility
{
public:
  explicit Mobility(MobilityParams params);

  const MobilityParams&
  params() const noexcept
  {
    return m_params;
  }

  void
  redraw(MobileState& s, double now, Rng& rng) const;

  /// Advances every mobile node by dt; redraws those whose epoch ended.
  /// Throws DomainError unless dt > 0.
  void
  step(std::vector<MobileState>& nodes, double dt, double now, Rng& rng) const;

  /// Reflects a position (and heading) back into the arena.
  void
  reflect(MobileState& s) const;

private:
  MobilityParams m_params;
};

// ---------------------------------------------------------------------------
// Scenario

struct MediumParams
{
  double range = 60;
  double lossRate = 0.10;
  double dataRate = 11e6;
};

enum class NodeRole { Repo, Downloader, PureForwarder, Intermediate };

std::string
roleName(NodeRole role);

enum class TxCategory : std::size_t {
  Discovery,
  Bitmap,
  Metadata,
  DataInterest,
  Data,
  FwdInterest,
  FwdData,
};

inline constexpr std::size_t kTxCategories = 7;

std::string
categoryName(TxCategory c);

/// Explicit node placement, used instead of the role counts when present.
struct NodeSpec
{
  NodeRole role = NodeRole::Downloader;
  Vec2 pos;
  bool mobile = false;
  bool hasMetadata = false; ///< downloader starts with the signed metadata
};

struct ScenarioConfig
{
  std::size_t repos = 2;
  std::size_t downloaders = 10;
  std::size_t pureForwarders = 5;
  std::size_t intermediates = 5;
  std::vector<NodeSpec> nodes;

  std::string collection = "/share/collection";
  std::string otherCollection = "/share/elsewhere";
  std::size_t files = 10;
  std::size_t fileSize = 100 * 1024;
  std::size_t packetSize = 1024;
  MetadataFormat metadataFormat = MetadataFormat::DigestList;
  DigestAlgorithm digest = DigestAlgorithm::Sha256;

  MediumParams medium;
  MobilityParams mobility;
  PeerConfig peer;
  std::size_t csCapacity = 10000;
  double suppressDuration = 5.0;
  double maxSimTime = 1200;

  /// Throws ConfigError naming the offending key.
  void
  validate() const;
};

// ---------------------------------------------------------------------------
// Metrics

struct NodeMetrics
{
  std::size_t index = 0;
  NodeRole role = NodeRole::Downloader;
  std::uint64_t peerId = 0;
  std::optional<double> completionTime;
  std::array<std::uint64_t, kTxCategories> tx{};
  std::uint64_t collisionsObserved = 0;
  std::uint64_t received = 0;
  std::uint64_t lost = 0;
  std::uint64_t forwardsCompleted = 0;
  std::uint64_t forwardsSatisfied = 0;
  std::uint64_t signatureFailures = 0;
  std::uint64_t rejectedPackets = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t bitmapCollisions = 0;

  std::uint64_t
  totalTx() const noexcept;
};

struct RunReport
{
  std::uint64_t seed = 0;
  double endTime = 0;
  double maxSimTime = 0;
  bool timedOut = false;
  std::uint64_t events = 0;
  std::vector<NodeMetrics> nodes;

  std::uint64_t
  totalTransmissions() const noexcept;

  std::array<std::uint64_t, kTxCategories>
  txByCategory() const noexcept;

  std::uint64_t
  totalCollisions() const noexcept;

  /// Satisfied / completed forwards over all nodes; 0 when nothing was forwarded.
  double
  forwardSuccessRatio() const noexcept;

  /// Download times of downloaders; unfinished ones count as maxSimTime.
  std::vector<double>
  downloadTimes() const;

  double
  meanDownloadTime() const;

  double
  medianDownloadTime() const;

  std::size_t
  completedDownloaders() const noexcept;
};

// ---------------------------------------------------------------------------
// World

class World;

/// One radio node: a forwarder with a default route to the radio face, and
/// a DAPES peer unless it is a pure forwarder.
class Node final : public PeerHost
{
public:
  Node(World& world, std::size_t index, NodeRole role, std::uint64_t seed, ForwarderConfig fwdConfig);

  std::size_t
  index() const noexcept
  {
    return m_index;
  }

  NodeRole
  role() const noexcept
  {
    return m_role;
  }

  Peer*
  peer() noexcept
  {
    return m_peer.get();
  }

  const Peer*
  peer() const noexcept
  {
    return m_peer.get();
  }

  void
  setPeer(std::unique_ptr<Peer> peer)
  {
    m_peer = std::move(peer);
  }

  NodeMetrics&
  metrics() noexcept
  {
    return m_metrics;
  }

  // PeerHost
  double
  now() const override;

  Rng&
  rng() override
  {
    return m_rng;
  }

  TimerId
  schedule(double delay, std::function<void()> fn) override;

  void
  cancel(TimerId id) override;

  void
  sendInterest(PacketPtr interest, double delay) override;

  void
  sendData(PacketPtr data, double delay, bool solicited) override;

  Forwarder&
  forwarder() override
  {
    return m_fwd;
  }

  void
  trace(const std::string& kind, const Name& name, const std::string& detail) override;

  void
  onDownloadComplete() override;

  // medium callbacks
  void
  receive(const PacketPtr& packet);

  void
  transmitted(const PacketPtr& packet, bool collided);

  void
  collisionObserved();

private:
  struct Pending
  {
    PacketPtr packet;
    TxCategory category;
    bool forwarded;
  };

  void
  queue(PacketPtr packet, double delay, TxCategory category, bool forwarded);

  void
  resend(TimerId id);

  void
  cancelPending(const Name& name, PacketKind kind);

  /// App: actions from the local application; Radio: from a received
  /// Interest; Relay: from a received Data.
  enum class Origin { App, Radio, Relay };

  void
  execute(const std::vector<Action>& actions, Origin origin);

  Decision
  policy(const Packet& interest, FaceId inFace, double now);

  TxCategory
  classify(const Packet& packet, bool forwarded) const;

  World& m_world;
  std::size_t m_index;
  NodeRole m_role;
  Rng m_rng;
  Forwarder m_fwd;
  std::unique_ptr<Peer> m_peer;
  std::map<TimerId, Pending> m_pending;
  std::map<TimerId, std::pair<PacketKind, Name>> m_appSends; ///< delayed sends through the forwarder
  NodeMetrics m_metrics;
};

class World
{
public:
  /// Builds nodes, collection and peers.  Throws ConfigError.
  World(const ScenarioConfig& config, std::uint64_t seed);
  ~World();

  World(const World&) = delete;
  World&
  operator=(const World&) = delete;

  /// Every event is written as one tab-separated line when set.
  void
  setTraceSink(std::ostream* sink)
  {
    m_trace = sink;
  }

  RunReport
  run();

  Scheduler&
  scheduler() noexcept
  {
    return m_scheduler;
  }

  const ScenarioConfig&
  config() const noexcept
  {
    return m_config;
  }

  std::size_t
  size() const noexcept
  {
    return m_nodes.size();
  }

  Node&
  node(std::size_t i)
  {
    return *m_nodes.at(i);
  }

  Vec2
  position(std::size_t i) const
  {
    return m_mobile.at(i).pos;
  }

  /// Puts a packet on the air.  Returns the airtime.
  double
  broadcast(std::size_t sender, PacketPtr packet);

  void
  trace(std::size_t node, const std::string& kind, const Name& name, const std::string& detail);

  void
  downloadFinished();

  /// End of the sender's current transmission (0 if idle so far).
  double
  busyUntil(std::size_t node) const
  {
    return m_busyUntil.at(node);
  }

  std::uint64_t
  broadcasts() const noexcept
  {
    return m_broadcasts;
  }

  std::uint64_t
  deliveries() const noexcept
  {
    return m_deliveries;
  }

  const std::shared_ptr<const Collection>&
  collection() const noexcept
  {
    return m_collection;
  }

private:
  struct Reception
  {
    std::size_t node;
    bool lost;
    bool corrupted;
  };

  struct Transmission
  {
    std::uint64_t id;
    std::size_t sender;
    double end;
    PacketPtr packet;
    std::vector<Reception> receptions;
    bool senderCollided = false;
  };

  void
  finish(std::uint64_t id);

  void
  mobilityTick();

  ScenarioConfig m_config;
  std::uint64_t m_seed;
  Scheduler m_scheduler;
  Mobility m_mobility;
  Rng m_placementRng;
  Rng m_lossRng;
  std::vector<std::unique_ptr<Node>> m_nodes;
  std::vector<MobileState> m_mobile;
  std::vector<double> m_busyUntil;
  std::shared_ptr<const Collection> m_collection;
  std::map<std::uint64_t, Transmission> m_active;
  std::uint64_t m_nextTx = 0;
  std::uint64_t m_broadcasts = 0;
  std::uint64_t m_deliveries = 0;
  std::size_t m_downloaders = 0;
  std::size_t m_finished = 0;
  std::ostream* m_trace = nullptr;
};

/// Builds a world and runs it to completion or maxSimTime.
RunReport
runScenario(const ScenarioConfig& config, std::uint64_t seed, std::ostream* trace = nullptr);

} // namespace dapes::sim

#include "dapes/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace dapes::sim {

namespace {

enum Stream : std::uint64_t {
  kMobilityStream = 1,
  kLossStream = 2,
  kContentStream = 3,
  kKeyStream = 4,
  kNodeStream = 100,
};

Bytes
randomBytes(Rng& rng, std::size_t n)
{
  Bytes out(n);
  for (std::size_t i = 0; i < n; i += 8) {
    auto x = rng.next();
    for (std::size_t j = 0; j < 8 && i + j < n; ++j)
      out[i + j] = static_cast<std::uint8_t>(x >> (8 * j));
  }
  return out;
}

} // namespace

std::string
roleName(NodeRole role)
{
  switch (role) {
  case NodeRole::Repo:
    return "repo";
  case NodeRole::Downloader:
    return "downloader";
  case NodeRole::PureForwarder:
    return "forwarder";
  case NodeRole::Intermediate:
    return "intermediate";
  }
  return "?";
}

std::string
categoryName(TxCategory c)
{
  static const char* names[kTxCategories] = {"discovery", "bitmap",       "metadata", "data_interest",
                                             "data",      "fwd_interest", "fwd_data"};
  return names[static_cast<std::size_t>(c)];
}

void
ScenarioConfig::validate() const
{
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why); };
  if (nodes.empty() && repos + downloaders + pureForwarders + intermediates == 0)
    fail("nodes", "scenario has no nodes");
  if (files == 0)
    fail("collection.files", "must be positive");
  if (fileSize == 0)
    fail("collection.file_size", "must be positive");
  if (packetSize == 0)
    fail("collection.packet_size", "must be positive");
  if (!(medium.range > 0))
    fail("medium.range", "must be positive");
  if (!(medium.lossRate >= 0 && medium.lossRate <= 1))
    fail("medium.loss_rate", "must be in [0, 1]");
  if (!(medium.dataRate > 0))
    fail("medium.data_rate", "must be positive");
  if (!(mobility.arenaWidth > 0) || !(mobility.arenaHeight > 0))
    fail("mobility.arena_width", "arena must be positive");
  if (!(mobility.speedMin >= 0) || mobility.speedMin > mobility.speedMax)
    fail("mobility.speed_min", "need 0 <= speed_min <= speed_max");
  if (!(mobility.redrawPeriod > 0))
    fail("mobility.redraw_period", "must be positive");
  if (!(mobility.tick > 0))
    fail("mobility.tick", "must be positive");
  if (!(maxSimTime > 0))
    fail("run.max_sim_time", "must be positive");
  if (csCapacity == 0)
    fail("forwarder.cs_capacity", "must be positive");
  if (!(suppressDuration >= 0))
    fail("forwarder.suppress_duration", "must be nonnegative");
  try {
    Name::parse(collection);
    Name::parse(otherCollection);
  }
  catch (const MalformedName& e) {
    fail("collection.name", e.what());
  }
  if (Name::parse(collection).empty())
    fail("collection.name", "must not be empty");
  try {
    peer.validate();
  }
  catch (const std::invalid_argument& e) {
    fail("peer." + std::string(e.what()), "invalid");
  }
}

// ---------------------------------------------------------------------------
// Node

Node::Node(World& world, std::size_t index, NodeRole role, std::uint64_t seed, ForwarderConfig fwdConfig)
  : m_world(world)
  , m_index(index)
  , m_role(role)
  , m_rng(seed)
  , m_fwd(fwdConfig)
{
  m_fwd.fib().insert(Name(), kRadioFace);
  m_metrics.index = index;
  m_metrics.role = role;
}

double
Node::now() const
{
  return m_world.scheduler().now();
}

TimerId
Node::schedule(double delay, std::function<void()> fn)
{
  return m_world.scheduler().after(delay, std::move(fn));
}

void
Node::cancel(TimerId id)
{
  m_world.scheduler().cancel(id);
}

void
Node::trace(const std::string& kind, const Name& name, const std::string& detail)
{
  m_world.trace(m_index, kind, name, detail);
}

void
Node::onDownloadComplete()
{
  m_world.downloadFinished();
}

TxCategory
Node::classify(const Packet& packet, bool forwarded) const
{
  if (isDiscoveryName(packet.name))
    return TxCategory::Discovery;
  if (isBitmapName(packet.name))
    return TxCategory::Bitmap;
  if (forwarded)
    return packet.kind == PacketKind::Interest ? TxCategory::FwdInterest : TxCategory::FwdData;
  if (isMetadataName(packet.name))
    return TxCategory::Metadata;
  return packet.kind == PacketKind::Interest ? TxCategory::DataInterest : TxCategory::Data;
}

void
Node::queue(PacketPtr packet, double delay, TxCategory category, bool forwarded)
{
  auto holder = std::make_shared<TimerId>(0);
  *holder = m_world.scheduler().after(delay, [this, holder] { resend(*holder); });
  m_pending[*holder] = {std::move(packet), category, forwarded};
}

void
Node::resend(TimerId id)
{
  auto it = m_pending.find(id);
  if (it == m_pending.end())
    return;
  Pending p = std::move(it->second);
  m_pending.erase(it);
  // the radio sends one frame at a time
  double busy = m_world.busyUntil(m_index);
  if (busy > now()) {
    auto again = std::make_shared<TimerId>(0);
    *again = m_world.scheduler().at(busy, [this, again] { resend(*again); });
    m_pending[*again] = std::move(p);
    return;
  }
  if (p.forwarded && p.packet->kind == PacketKind::Interest)
    m_fwd.markForwarded(p.packet->name, now());
  ++m_metrics.tx[static_cast<std::size_t>(p.category)];
  m_world.trace(m_index, "tx", p.packet->name, categoryName(p.category));
  m_world.broadcast(m_index, p.packet);
}

void
Node::cancelPending(const Name& name, PacketKind kind)
{
  for (auto it = m_pending.begin(); it != m_pending.end();) {
    if (it->second.packet->kind == kind && it->second.packet->name == name) {
      if (it->second.forwarded && kind == PacketKind::Interest)
        m_fwd.cancelForward(name);
      m_world.scheduler().cancel(it->first);
      it = m_pending.erase(it);
    }
    else {
      ++it;
    }
  }
  for (auto it = m_appSends.begin(); it != m_appSends.end();) {
    if (it->second.first == kind && it->second.second == name) {
      m_world.scheduler().cancel(it->first);
      it = m_appSends.erase(it);
    }
    else {
      ++it;
    }
  }
}

Decision
Node::policy(const Packet& interest, FaceId, double t)
{
  if (m_peer)
    return m_peer->decide(interest, t);
  return m_fwd.pureForwardDecide(interest, t, m_world.config().peer.forwardProbNoKnowledge, m_rng);
}

void
Node::execute(const std::vector<Action>& actions, Origin origin)
{
  bool fromApp = origin == Origin::App;
  for (const auto& a : actions) {
    switch (a.kind) {
    case Action::SendInterest:
      queue(a.packet, a.delay, classify(*a.packet, !fromApp), !fromApp);
      break;
    case Action::SendData: {
      // cache answers count as answers; only PIT relays are forwarding
      double delay = fromApp ? 0.0 : m_rng.uniform(0.0, m_fwd.config().fwdJitterMax);
      queue(a.packet, delay, classify(*a.packet, origin == Origin::Relay), false);
      break;
    }
    case Action::DeliverToApp:
      if (!m_peer)
        break;
      if (a.packet->kind == PacketKind::Interest)
        m_peer->onInterest(a.packet);
      else if (fromApp)
        m_peer->onData(a.packet);
      break;
    }
  }
}

void
Node::sendInterest(PacketPtr interest, double delay)
{
  if (interest->hopLimit && *interest->hopLimit <= 1) {
    auto category = classify(*interest, false);
    queue(std::move(interest), delay, category, false);
    return;
  }
  auto holder = std::make_shared<TimerId>(0);
  *holder = schedule(delay, [this, interest, holder] {
    m_appSends.erase(*holder);
    auto actions = m_fwd.onInterest(interest, kAppFace, now(),
                                    [](const Packet&, FaceId, double) { return Decision::forward(0); });
    execute(actions, Origin::App);
  });
  m_appSends[*holder] = {PacketKind::Interest, interest->name};
}

void
Node::sendData(PacketPtr data, double delay, bool solicited)
{
  if (!solicited) {
    auto category = classify(*data, false);
    queue(std::move(data), delay, category, false);
    return;
  }
  auto holder = std::make_shared<TimerId>(0);
  *holder = schedule(delay, [this, data, holder] {
    m_appSends.erase(*holder);
    execute(m_fwd.onData(data, kAppFace, now()), Origin::App);
  });
  m_appSends[*holder] = {PacketKind::Data, data->name};
}

void
Node::receive(const PacketPtr& packet)
{
  ++m_metrics.received;
  double t = now();
  if (packet->kind == PacketKind::Interest) {
    if (!isDiscoveryName(packet->name))
      cancelPending(packet->name, PacketKind::Interest);
    auto actions =
      m_fwd.onInterest(packet, kRadioFace, t, [this](const Packet& i, FaceId f, double at) { return policy(i, f, at); });
    execute(actions, Origin::Radio);
    return;
  }

  cancelPending(packet->name, PacketKind::Data);
  cancelPending(packet->name, PacketKind::Interest);
  bool cacheable = !isDiscoveryName(packet->name) && !isBitmapName(packet->name);
  execute(m_fwd.onData(packet, kRadioFace, t, cacheable), Origin::Relay);
  if (m_peer)
    m_peer->onData(packet);
}

void
Node::transmitted(const PacketPtr& packet, bool collided)
{
  if (m_peer)
    m_peer->onTransmitted(*packet, collided);
}

void
Node::collisionObserved()
{
  ++m_metrics.collisionsObserved;
  if (m_peer)
    m_peer->onCollisionObserved();
}

// ---------------------------------------------------------------------------
// World

World::World(const ScenarioConfig& config, std::uint64_t seed)
  : m_config(config)
  , m_seed(seed)
  , m_mobility(config.mobility)
  , m_placementRng(deriveSeed(seed, kMobilityStream))
  , m_lossRng(deriveSeed(seed, kLossStream))
{
  m_config.validate();

  std::vector<NodeSpec> specs = m_config.nodes;
  if (specs.empty()) {
    auto add = [&](NodeRole role, std::size_t n, bool mobile) {
      for (std::size_t i = 0; i < n; ++i)
        specs.push_back({role, {}, mobile});
    };
    add(NodeRole::Repo, m_config.repos, false);
    add(NodeRole::Downloader, m_config.downloaders, true);
    add(NodeRole::PureForwarder, m_config.pureForwarders, true);
    add(NodeRole::Intermediate, m_config.intermediates, true);
    for (auto& s : specs) {
      s.pos.x = m_placementRng.uniform(0.0, m_config.mobility.arenaWidth);
      s.pos.y = m_placementRng.uniform(0.0, m_config.mobility.arenaHeight);
    }
  }

  // collection held by every repo
  Rng contentRng(deriveSeed(seed, kContentStream));
  Rng keyRng(deriveSeed(seed, kKeyStream));
  auto repoSigner = std::make_shared<KeyedHashSigner>("repo", randomBytes(keyRng, 32));
  auto trust = std::make_shared<TrustStore>();
  trust->add(toBytes("repo"), repoSigner);

  Name collectionName = Name::parse(m_config.collection);
  std::vector<FileSpec> files;
  for (std::size_t f = 0; f < m_config.files; ++f)
    files.push_back({"file" + std::to_string(f), randomBytes(contentRng, m_config.fileSize)});
  m_collection = std::make_shared<const Collection>(
    buildCollection(collectionName, files, m_config.packetSize, *repoSigner));
  auto [metadata, segments] = buildMetadata(*m_collection, m_config.metadataFormat, m_config.digest, *repoSigner,
                                            m_config.packetSize);

  ForwarderConfig fwdConfig;
  fwdConfig.csCapacity = m_config.csCapacity;
  fwdConfig.pitLifetime = m_config.peer.pitLifetime;
  fwdConfig.suppressDuration = m_config.suppressDuration;
  fwdConfig.fwdJitterMax = m_config.peer.fwdJitterMax;

  PeerConfig peerConfig = m_config.peer;
  // one PEBA slot must hold the longest bitmap transmission
  if (peerConfig.slotDuration <= 0)
    peerConfig.slotDuration = 0.001;

  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    auto node = std::make_unique<Node>(*this, i, s.role, deriveSeed(seed, kNodeStream + i), fwdConfig);
    std::uint64_t peerId = i + 1;
    node->metrics().peerId = peerId;
    auto signer = std::make_shared<KeyedHashSigner>("node" + std::to_string(peerId), randomBytes(keyRng, 32));
    switch (s.role) {
    case NodeRole::Repo:
      node->setPeer(std::make_unique<Peer>(*node, peerId, peerConfig, m_collection, metadata, segments, trust,
                                           repoSigner));
      break;
    case NodeRole::Downloader:
      node->setPeer(std::make_unique<Peer>(*node, peerId, PeerRole::Downloader, peerConfig, collectionName, trust,
                                           signer));
      if (s.hasMetadata)
        node->peer()->preloadMetadata(metadata, segments);
      ++m_downloaders;
      break;
    case NodeRole::Intermediate:
      node->setPeer(std::make_unique<Peer>(*node, peerId, PeerRole::Intermediate, peerConfig,
                                           Name::parse(m_config.otherCollection), trust, signer));
      break;
    case NodeRole::PureForwarder:
      break;
    }
    MobileState ms;
    ms.pos = s.pos;
    ms.mobile = s.mobile;
    m_mobility.reflect(ms);
    if (ms.mobile)
      m_mobility.redraw(ms, 0, m_placementRng);
    m_mobile.push_back(ms);
    m_nodes.push_back(std::move(node));
    m_busyUntil.push_back(0);
  }
}

World::~World() = default;

void
World::trace(std::size_t node, const std::string& kind, const Name& name, const std::string& detail)
{
  if (m_trace == nullptr)
    return;
  char head[64];
  std::snprintf(head, sizeof(head), "%.9f\t%zu\t", m_scheduler.now(), node);
  *m_trace << head << kind << '\t' << name.toUri() << '\t' << detail << '\n';
}

void
World::downloadFinished()
{
  ++m_finished;
}

double
World::broadcast(std::size_t sender, PacketPtr packet)
{
  double now = m_scheduler.now();
  double airtime = static_cast<double>(encodedSize(*packet)) * 8.0 / m_config.medium.dataRate;
  ++m_broadcasts;

  Transmission tx;
  tx.id = ++m_nextTx;
  tx.sender = sender;
  tx.end = now + airtime;
  tx.packet = std::move(packet);
  Vec2 from = m_mobile[sender].pos;
  for (std::size_t r = 0; r < m_nodes.size(); ++r) {
    if (r == sender || distance(from, m_mobile[r].pos) > m_config.medium.range)
      continue;
    bool lost = m_config.medium.lossRate > 0 && m_lossRng.bernoulli(m_config.medium.lossRate);
    tx.receptions.push_back({r, lost, false});
  }

  for (auto& [id, other] : m_active) {
    if (!(other.end > now))
      continue;
    for (auto& mine : tx.receptions) {
      for (auto& theirs : other.receptions) {
        if (theirs.node == mine.node) {
          mine.corrupted = true;
          theirs.corrupted = true;
        }
      }
      if (mine.node == other.sender)
        other.senderCollided = true;
    }
    for (const auto& theirs : other.receptions) {
      if (theirs.node == sender)
        tx.senderCollided = true;
    }
  }

  auto id = tx.id;
  m_busyUntil[sender] = tx.end;
  m_active.emplace(id, std::move(tx));
  m_scheduler.after(airtime, [this, id] { finish(id); });
  return airtime;
}

void
World::finish(std::uint64_t id)
{
  auto it = m_active.find(id);
  Transmission tx = std::move(it->second);
  m_active.erase(it);
  for (const auto& r : tx.receptions) {
    auto& node = *m_nodes[r.node];
    if (r.corrupted) {
      trace(r.node, "collision", tx.packet->name, std::to_string(tx.sender));
      node.collisionObserved();
    }
    else if (r.lost) {
      ++node.metrics().lost;
    }
    else {
      ++m_deliveries;
      node.receive(tx.packet);
    }
  }
  m_nodes[tx.sender]->transmitted(tx.packet, tx.senderCollided);
}

void
World::mobilityTick()
{
  double dt = m_config.mobility.tick;
  m_mobility.step(m_mobile, dt, m_scheduler.now(), m_placementRng);
  m_scheduler.after(dt, [this] { mobilityTick(); });
}

RunReport
World::run()
{
  for (auto& n : m_nodes) {
    if (n->peer())
      n->peer()->start();
  }
  if (std::any_of(m_mobile.begin(), m_mobile.end(), [](const auto& s) { return s.mobile; }))
    m_scheduler.after(m_config.mobility.tick, [this] { mobilityTick(); });

  while (auto t = m_scheduler.peekTime()) {
    if (*t > m_config.maxSimTime)
      break;
    m_scheduler.runNext();
    if (m_downloaders > 0 && m_finished >= m_downloaders)
      break;
  }

  RunReport report;
  report.seed = m_seed;
  report.endTime = m_scheduler.now();
  report.maxSimTime = m_config.maxSimTime;
  report.timedOut = m_finished < m_downloaders;
  report.events = m_scheduler.executed();
  for (auto& n : m_nodes) {
    NodeMetrics m = n->metrics();
    const auto& fc = n->forwarder().counters();
    m.forwardsCompleted = fc.forwardsCompleted;
    m.forwardsSatisfied = fc.forwardsSatisfied;
    if (const Peer* p = n->peer()) {
      m.completionTime = p->completionTime();
      const auto& pc = p->counters();
      m.signatureFailures = pc.signatureFailures;
      m.rejectedPackets = pc.rejectedPackets;
      m.retransmissions = pc.retransmissions;
      m.bitmapCollisions = pc.bitmapCollisions;
    }
    if (m.role == NodeRole::Repo)
      m.completionTime.reset();
    report.nodes.push_back(m);
  }
  return report;
}

RunReport
runScenario(const ScenarioConfig& config, std::uint64_t seed, std::ostream* trace)
{
  World world(config, seed);
  world.setTraceSink(trace);
  return world.run();
}

} // namespace dapes::sim

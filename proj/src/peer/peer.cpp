#include "dapes/peer.hpp"
#include "dapes/tlv.hpp"

#include <algorithm>
#include <cmath>

namespace dapes {

namespace {

const Name kDiscovery = Name::parse("/dapes/discovery");

std::uint32_t
nonce(Rng& rng)
{
  return static_cast<std::uint32_t>(rng.next() >> 32);
}

} // namespace

void
PeerConfig::validate() const
{
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (discoveryPeriodMin <= 0)
    fail("discoveryPeriodMin", "must be positive");
  if (discoveryPeriodMin > discoveryPeriodMax)
    fail("discoveryPeriodMax", "must be >= discoveryPeriodMin");
  if (pipelineDepth == 0)
    fail("pipelineDepth", "must be positive");
  if (forwardProbNoKnowledge < 0 || forwardProbNoKnowledge > 1)
    fail("forwardProbNoKnowledge", "must be in [0, 1]");
  if (window <= 0)
    fail("window", "must be positive");
  if (pebaGroups == 0)
    fail("pebaGroups", "must be positive");
  if (slotDuration <= 0)
    fail("slotDuration", "must be positive");
  if (knowledgeTtl <= 0 || encounterTimeout <= 0)
    fail("knowledgeTtl", "timeouts must be positive");
  if (historyCapacity == 0)
    fail("historyCapacity", "must be positive");
  if (maxAttempts == 0 || maxBitmapAttempts == 0)
    fail("maxAttempts", "must be positive");
  if (pitLifetime <= 0)
    fail("pitLifetime", "must be positive");
  if (fwdJitterMax < 0 || requestJitterMax < 0 || bitmapPhaseTimeout < 0)
    fail("fwdJitterMax", "must be nonnegative");
}

// ---------------------------------------------------------------------------
// Names and payloads

Name
discoveryPrefix()
{
  return kDiscovery;
}

Name
bitmapName(const Name& collection, std::uint64_t peerId)
{
  Name n = collection;
  n.append("bitmap");
  n.append(peerId);
  return n;
}

Name
collectionOf(const Name& name)
{
  if (name.size() < 3)
    return Name();
  return name.getPrefix(name.size() - 2);
}

bool
isDiscoveryName(const Name& name)
{
  return kDiscovery.isPrefixOf(name);
}

bool
isBitmapName(const Name& name)
{
  return name.size() >= 3 && name[name.size() - 2] == "bitmap";
}

bool
isMetadataName(const Name& name)
{
  return name.size() >= 3 && name[name.size() - 2] == "metadata";
}

Bytes
encodeDiscoveryParams(std::uint64_t peerId)
{
  Bytes out;
  tlv::appendNonNegativeInteger(out, tlv::PeerId, peerId);
  return out;
}

std::uint64_t
decodeDiscoveryParams(std::span<const std::uint8_t> payload)
{
  tlv::Reader r(payload);
  auto v = r.expect(tlv::PeerId);
  return tlv::readNonNegativeInteger(v.value, v.valueOffset);
}

Bytes
encodeDiscoveryContent(std::uint64_t peerId, const std::vector<Name>& metadataNames)
{
  Bytes list;
  for (const auto& n : metadataNames)
    tlv::appendName(list, n);
  Bytes out;
  tlv::appendNonNegativeInteger(out, tlv::PeerId, peerId);
  tlv::appendElement(out, tlv::MetadataNameList, list);
  return out;
}

std::pair<std::uint64_t, std::vector<Name>>
decodeDiscoveryContent(std::span<const std::uint8_t> payload)
{
  tlv::Reader r(payload);
  auto idView = r.expect(tlv::PeerId);
  auto id = tlv::readNonNegativeInteger(idView.value, idView.valueOffset);
  auto listView = r.expect(tlv::MetadataNameList);
  if (!r.atEnd())
    throw tlv::CodecError(r.offset(), "trailing bytes after discovery content");
  std::vector<Name> names;
  tlv::Reader lr(listView.value, listView.valueOffset);
  while (!lr.atEnd())
    names.push_back(tlv::readName(lr.expect(tlv::NameType)));
  return {id, std::move(names)};
}

// ---------------------------------------------------------------------------

struct Peer::Session
{
  Name collection;
  Name metadataPrefix;

  // metadata retrieval
  std::vector<PacketPtr> segments;
  std::optional<std::uint64_t> segmentCount;
  std::map<std::uint64_t, TimerId> segmentsInFlight;
  std::optional<CollectionMetadata> md;
  GlobalOrdering order;

  // content
  std::vector<PacketPtr> store;
  Bitmap own;
  VerifyContext verify;
  Bitmap pendingVerify;
  std::map<std::uint64_t, PacketPtr> deferred;

  // requests
  struct Request
  {
    TimerId timer;
    bool probe;
  };
  std::map<std::uint64_t, Request> inFlight;
  Bitmap inFlightMask;
  std::vector<std::uint8_t> attempts;
  Bitmap exhausted;
  std::size_t probes = 0;

  // rarity
  EncounterHistory history;
  RarityVector rarity;
  Bitmap avail;
  bool rarityDirty = true;
  double rarityTime = -1;

  // encounter
  Bitmap heardUnion;
  std::set<std::uint64_t> heardFrom;
  bool advertised = false;
  std::size_t advertisedHave = 0;
  double lastAdvert = -1e300;
  double lastRefresh = -1e300;
  std::optional<TimerId> advertTimer;
  bool pebaMode = false;
  PebaState peba;
  unsigned advertAttempts = 0;
  bool paused = false;
  std::optional<TimerId> gateTimer;
  double lastBitmapInterest = -1e300;

  explicit Session(std::size_t historyCapacity)
    : history(historyCapacity)
  {
  }

  void
  initContent(const CollectionMetadata& metadata)
  {
    md = metadata;
    order = metadata.ordering();
    auto total = static_cast<std::size_t>(order.total());
    store.assign(total, nullptr);
    own = Bitmap(total);
    pendingVerify = Bitmap(total);
    inFlightMask = Bitmap(total);
    exhausted = Bitmap(total);
    attempts.assign(total, 0);
    avail = Bitmap(total);
    heardUnion = Bitmap(total);
    rarity.assign(total, 0);
  }
};

Peer::Peer(PeerHost& host, std::uint64_t peerId, PeerRole role, PeerConfig config, Name wanted,
           std::shared_ptr<const TrustStore> trust, std::shared_ptr<const Signer> signer)
  : m_host(host)
  , m_peerId(peerId)
  , m_role(role)
  , m_config(config)
  , m_wanted(std::move(wanted))
  , m_trust(std::move(trust))
  , m_signer(std::move(signer))
  , m_discoveryPeriod(config.discoveryPeriodMin)
{
  m_config.validate();
  m_session = std::make_unique<Session>(m_config.historyCapacity);
  m_session->collection = m_wanted;
  m_session->metadataPrefix = m_wanted;
  m_session->metadataPrefix.append("metadata");
  m_session->peba.groups = m_config.pebaGroups;
  m_session->peba.slotDuration = m_config.slotDuration;
}

Peer::Peer(PeerHost& host, std::uint64_t peerId, PeerConfig config, std::shared_ptr<const Collection> collection,
           CollectionMetadata metadata, std::vector<PacketPtr> metadataSegments,
           std::shared_ptr<const TrustStore> trust, std::shared_ptr<const Signer> signer)
  : Peer(host, peerId, PeerRole::Repo, config, collection->name(), std::move(trust), std::move(signer))
{
  auto& s = *m_session;
  s.initContent(metadata);
  s.segments = std::move(metadataSegments);
  s.segmentCount = s.segments.size();
  for (std::size_t g = 0; g < collection->totalPackets(); ++g) {
    s.store[g] = collection->packet(g);
    s.own.set(g);
  }
}

Peer::~Peer() = default;

bool
Peer::complete() const
{
  return m_session->md && m_session->own.full();
}

bool
Peer::hasMetadata() const
{
  return m_session->md.has_value();
}

const Bitmap&
Peer::ownBitmap() const
{
  return m_session->own;
}

std::size_t
Peer::inFlightCount() const
{
  return m_session->inFlight.size();
}

std::size_t
Peer::bitmapsHeardThisEncounter() const
{
  return m_session->heardFrom.size();
}

Bytes
Peer::fileContent(std::size_t fileIndex) const
{
  const auto& s = *m_session;
  if (!s.md || fileIndex >= s.order.fileCount())
    return {};
  Bytes out;
  for (std::uint64_t i = 0; i < s.order.count(fileIndex); ++i) {
    const auto& p = s.store[s.order.globalIndex(fileIndex, i)];
    if (!p)
      return {};
    out.insert(out.end(), p->payload.begin(), p->payload.end());
  }
  return out;
}

PacketPtr
Peer::makeSignedData(Name name, Bytes content) const
{
  Packet d = makeData(std::move(name), std::move(content));
  if (m_signer)
    signData(d, *m_signer);
  return std::make_shared<const Packet>(std::move(d));
}

bool
Peer::preloadMetadata(const CollectionMetadata& md, std::vector<PacketPtr> segments)
{
  if (m_role != PeerRole::Downloader || m_session->md)
    return false;
  bool ok = false;
  try {
    ok = md.collectionName == m_session->collection && verifyMetadataSignature(md, *m_trust);
  }
  catch (const UnknownKey&) {
  }
  if (!ok) {
    ++m_counters.signatureFailures;
    m_metadataFailed = true;
    return false;
  }
  m_preloaded.emplace(md, std::move(segments));
  return true;
}

void
Peer::start()
{
  m_host.schedule(m_host.rng().uniform(0.0, m_config.discoveryPeriodMin), [this] { onDiscoveryTimer(); });
  if (m_preloaded) {
    auto [md, segments] = std::move(*m_preloaded);
    m_preloaded.reset();
    m_session->segmentCount = segments.size();
    installMetadata(std::move(md), std::move(segments));
    return;
  }
  if (m_role == PeerRole::Downloader && m_session->md && !complete())
    fillPipeline();
}

// ---------------------------------------------------------------------------
// Discovery

bool
Peer::isFresh(const Neighbor& n, double now) const
{
  return n.lastHeard >= now - m_config.encounterTimeout;
}

bool
Peer::inCollection(const Neighbor& n) const
{
  return n.collections.count(m_session->metadataPrefix) > 0 || n.bitmaps.count(m_session->collection) > 0;
}

void
Peer::heard(std::uint64_t peerId)
{
  double now = m_host.now();
  m_neighbors[peerId].lastHeard = now;
  m_lastNeighborHeard = now;
}

void
Peer::onDiscoveryTimer()
{
  double now = m_host.now();
  Packet interest = makeInterest(discoveryPrefix(), nonce(m_host.rng()), encodeDiscoveryParams(m_peerId));
  interest.hopLimit = 1;
  m_host.sendInterest(std::make_shared<const Packet>(std::move(interest)), 0);

  bool recent = m_lastNeighborHeard >= now - m_discoveryPeriod;
  m_discoveryPeriod = recent ? m_config.discoveryPeriodMin
                             : std::min(2 * m_discoveryPeriod, m_config.discoveryPeriodMax);
  m_lastDiscoveryTick = now;

  // periodic bitmap refresh so neighbors' knowledge does not go stale
  auto& s = *m_session;
  if (s.md && !s.advertTimer && now - s.lastRefresh >= m_config.knowledgeTtl / 2) {
    bool any = false;
    for (const auto& [id, n] : m_neighbors)
      any = any || (isFresh(n, now) && inCollection(n));
    if (any) {
      s.lastRefresh = now;
      s.heardUnion = Bitmap(s.own.size());
      s.advertised = false;
      s.pebaMode = false;
      s.peba.reset();
      s.advertAttempts = 0;
      scheduleAdvert();
    }
  }

  m_host.schedule(m_discoveryPeriod, [this] { onDiscoveryTimer(); });
}

void
Peer::onDiscoveryInterest(const Packet& interest)
{
  std::uint64_t from = 0;
  try {
    from = decodeDiscoveryParams(interest.payload);
  }
  catch (const tlv::CodecError&) {
    return;
  }
  if (from == m_peerId)
    return;
  heard(from);
  if (m_discoveryReplyPending)
    return;
  m_discoveryReplyPending = true;
  m_host.schedule(m_host.rng().uniform(0.0, m_config.fwdJitterMax), [this] {
    m_discoveryReplyPending = false;
    std::vector<Name> names;
    if (m_session->md)
      names.push_back(m_session->metadataPrefix);
    Name name = discoveryPrefix();
    name.append(m_peerId);
    m_host.sendData(makeSignedData(std::move(name), encodeDiscoveryContent(m_peerId, names)), 0, false);
  });
}

void
Peer::onDiscoveryData(const Packet& data)
{
  std::pair<std::uint64_t, std::vector<Name>> content;
  try {
    content = decodeDiscoveryContent(data.payload);
  }
  catch (const tlv::CodecError&) {
    return;
  }
  auto [from, names] = std::move(content);
  if (from == m_peerId)
    return;
  double now = m_host.now();
  auto& n = m_neighbors[from];
  bool before = isFresh(n, now) && inCollection(n);
  n.collections = std::set<Name>(names.begin(), names.end());
  heard(from);
  if (m_session->md && !before && inCollection(n))
    startEpoch();
  maybeFetchMetadata();
}

// ---------------------------------------------------------------------------
// Metadata

void
Peer::maybeFetchMetadata()
{
  auto& s = *m_session;
  if (s.md || m_metadataFailed || m_role == PeerRole::Repo)
    return;
  double now = m_host.now();
  bool advertised = false;
  for (const auto& [id, n] : m_neighbors)
    advertised = advertised || (isFresh(n, now) && n.collections.count(s.metadataPrefix) > 0);
  if (!advertised)
    return;

  if (!s.segmentCount) {
    if (s.segmentsInFlight.empty())
      requestMetadataSegment(0);
    return;
  }
  for (std::uint64_t seq = 0; seq < *s.segmentCount && s.segmentsInFlight.size() < m_config.pipelineDepth; ++seq) {
    if (!s.segments[seq] && !s.segmentsInFlight.count(seq))
      requestMetadataSegment(seq);
  }
}

void
Peer::requestMetadataSegment(std::uint64_t seq)
{
  auto& s = *m_session;
  Name name = s.metadataPrefix;
  name.append(seq);
  double delay = m_host.rng().uniform(0.0, m_config.requestJitterMax);
  m_host.sendInterest(std::make_shared<const Packet>(makeInterest(std::move(name), nonce(m_host.rng()))), delay);
  s.segmentsInFlight[seq] = m_host.schedule(delay + m_config.pitLifetime, [this, seq] {
    m_session->segmentsInFlight.erase(seq);
    ++m_counters.retransmissions;
    maybeFetchMetadata();
  });
}

void
Peer::onMetadataSegment(const PacketPtr& data)
{
  auto& s = *m_session;
  std::uint64_t seq = 0;
  try {
    seq = toNumber(data->name.back());
  }
  catch (const MalformedName&) {
    return;
  }
  if (auto it = s.segmentsInFlight.find(seq); it != s.segmentsInFlight.end()) {
    m_host.cancel(it->second);
    s.segmentsInFlight.erase(it);
  }

  if (!s.segmentCount) {
    if (seq != 0)
      return;
    try {
      s.segmentCount = metadataSegmentCount(data->payload, data->payload.size());
    }
    catch (const tlv::CodecError&) {
      ++m_counters.metadataParseFailures;
      return;
    }
    s.segments.assign(*s.segmentCount, nullptr);
  }
  if (seq >= *s.segmentCount)
    return;
  s.segments[seq] = data;

  if (std::any_of(s.segments.begin(), s.segments.end(), [](const auto& p) { return !p; })) {
    maybeFetchMetadata();
    return;
  }

  std::vector<Bytes> payloads;
  for (const auto& p : s.segments)
    payloads.push_back(p->payload);
  CollectionMetadata md;
  try {
    md = reassembleMetadata(payloads);
  }
  catch (const tlv::CodecError& e) {
    ++m_counters.metadataParseFailures;
    m_host.trace("metadata-invalid", s.metadataPrefix, e.what());
    s.segments.clear();
    s.segmentCount.reset();
    maybeFetchMetadata();
    return;
  }

  bool ok = false;
  try {
    ok = md.collectionName == s.collection && verifyMetadataSignature(md, *m_trust);
  }
  catch (const UnknownKey&) {
    ok = false;
  }
  if (!ok) {
    ++m_counters.signatureFailures;
    m_metadataFailed = true;
    m_host.trace("signature-invalid", s.metadataPrefix, "collection dropped");
    return;
  }
  auto segments = s.segments;
  installMetadata(std::move(md), std::move(segments));
}

void
Peer::installMetadata(CollectionMetadata md, std::vector<PacketPtr> segments)
{
  auto& s = *m_session;
  s.initContent(md);
  s.segments = std::move(segments);
  m_host.trace("metadata", s.metadataPrefix, std::to_string(s.own.size()) + " packets");

  std::vector<PacketPtr> cached;
  m_host.forwarder().cs().forEach([&](const PacketPtr& p) {
    if (s.collection.isPrefixOf(p->name) && !isBitmapName(p->name) && !isMetadataName(p->name))
      cached.push_back(p);
  });
  // oldest first keeps absorption order independent of cache recency
  std::reverse(cached.begin(), cached.end());
  for (const auto& p : cached)
    absorb(p);
  if (complete())
    return;

  double now = m_host.now();
  bool any = false;
  for (const auto& [id, n] : m_neighbors)
    any = any || (isFresh(n, now) && inCollection(n));
  if (any)
    startEpoch();
  fillPipeline();
}

// ---------------------------------------------------------------------------
// Bitmap exchange

void
Peer::startEpoch()
{
  auto& s = *m_session;
  if (!s.md)
    return;
  ++m_counters.epochs;
  double now = m_host.now();
  if (s.advertTimer) {
    m_host.cancel(*s.advertTimer);
    s.advertTimer.reset();
  }
  s.heardUnion = Bitmap(s.own.size());
  s.heardFrom.clear();
  s.advertised = false;
  s.pebaMode = false;
  s.peba.reset();
  s.advertAttempts = 0;
  s.lastRefresh = now;
  s.exhausted = Bitmap(s.own.size());
  std::fill(s.attempts.begin(), s.attempts.end(), 0);
  m_host.trace("epoch", s.collection, std::to_string(m_counters.epochs));

  if (m_role == PeerRole::Downloader && !complete() && m_config.bitmapsTarget > 0) {
    s.paused = true;
    if (s.gateTimer)
      m_host.cancel(*s.gateTimer);
    s.gateTimer = m_host.schedule(m_config.bitmapPhaseTimeout, [this] {
      m_session->gateTimer.reset();
      m_session->paused = false;
      fillPipeline();
    });
  }
  scheduleAdvert();
  // nothing to offer: still ask the neighborhood for bitmaps
  if (!s.advertTimer && m_role == PeerRole::Downloader && !complete()) {
    double delay = m_config.window + m_host.rng().uniform(0.0, m_config.window);
    s.advertTimer = m_host.schedule(delay, [this] {
      m_session->advertTimer.reset();
      if (m_session->heardFrom.empty())
        sendAdvert(true);
    });
  }
}

void
Peer::scheduleAdvert()
{
  auto& s = *m_session;
  if (s.pebaMode && s.advertTimer)
    return;
  if (s.advertTimer) {
    m_host.cancel(*s.advertTimer);
    s.advertTimer.reset();
  }
  if (s.advertised)
    return;
  std::size_t contribution = s.own.countNotIn(s.heardUnion);
  std::size_t missing = s.own.size() - s.heardUnion.haveCount();
  // nothing new to offer: stay silent
  if (contribution == 0 || missing == 0)
    return;
  double delay = bitmapTimerLinear(m_config.window, static_cast<double>(contribution) / static_cast<double>(missing));
  s.advertTimer = m_host.schedule(delay, [this] {
    m_session->advertTimer.reset();
    sendAdvert(m_session->heardFrom.empty());
  });
}

void
Peer::scheduleAdvertAfterCollision()
{
  auto& s = *m_session;
  if (s.advertTimer) {
    m_host.cancel(*s.advertTimer);
    s.advertTimer.reset();
  }
  std::size_t contribution = s.own.countNotIn(s.heardUnion);
  std::size_t missing = s.own.size() - s.heardUnion.haveCount();
  if (contribution == 0 || missing == 0)
    return;
  PebaState st = s.peba;
  st.groups = std::min(st.groups, st.slots());
  unsigned slot = pebaAssignSlot(st, contribution, missing, m_host.rng());
  m_host.trace("peba", s.collection,
               "L=" + std::to_string(st.slots()) + " k=" + std::to_string(st.groups) + " slot=" + std::to_string(slot));
  s.advertTimer = m_host.schedule(slot * s.peba.slotDuration, [this] {
    m_session->advertTimer.reset();
    sendAdvert(m_session->heardFrom.empty());
  });
}

void
Peer::sendAdvert(bool asInterest)
{
  auto& s = *m_session;
  double now = m_host.now();
  Name name = bitmapName(s.collection, m_peerId);
  if (asInterest) {
    Packet interest = makeInterest(std::move(name), nonce(m_host.rng()), s.own.encode());
    interest.hopLimit = 1;
    m_host.sendInterest(std::make_shared<const Packet>(std::move(interest)), 0);
  }
  else {
    m_host.sendData(makeSignedData(std::move(name), s.own.encode()), 0, false);
  }
  s.advertised = true;
  s.advertisedHave = s.own.haveCount();
  s.lastAdvert = now;
  ++s.advertAttempts;
  ++m_counters.bitmapsSent;
}

void
Peer::onBitmap(std::uint64_t from, const Name& collection, Bitmap bitmap, bool isInterest)
{
  if (from == m_peerId)
    return;
  double now = m_host.now();
  auto& n = m_neighbors[from];
  auto& s = *m_session;
  bool before = isFresh(n, now) && inCollection(n);
  n.bitmaps[collection] = {bitmap, now};
  heard(from);

  if (collection != s.collection || !s.md || bitmap.size() != s.own.size())
    return;
  ++m_counters.bitmapsHeard;
  if (!before)
    startEpoch();

  s.history.record(from, bitmap, now);
  s.rarityDirty = true;
  s.heardUnion.unite(bitmap);
  s.heardFrom.insert(from);

  if (isInterest && s.advertised &&
      (s.own.haveCount() != s.advertisedHave || now - s.lastAdvert > 5 * m_config.window)) {
    s.advertised = false;
    s.advertAttempts = 0;
  }
  if (!s.advertised) {
    if (s.pebaMode && s.advertTimer && s.own.countNotIn(s.heardUnion) == 0) {
      m_host.cancel(*s.advertTimer);
      s.advertTimer.reset();
    }
    else {
      scheduleAdvert();
    }
  }
  updateGate();
}

void
Peer::onTransmitted(const Packet& packet, bool collided)
{
  auto& s = *m_session;
  if (!s.md || !isBitmapName(packet.name) || packet.name != bitmapName(s.collection, m_peerId))
    return;
  if (!collided) {
    s.heardUnion.unite(s.own);
    return;
  }
  ++m_counters.bitmapCollisions;
  m_host.trace("bitmap-collision", packet.name, "attempt " + std::to_string(s.advertAttempts));
  if (s.advertAttempts >= m_config.maxBitmapAttempts)
    return;
  s.advertised = false;
  if (m_config.peba) {
    s.pebaMode = true;
    s.peba.onCollision();
    scheduleAdvertAfterCollision();
  }
  else {
    scheduleAdvert();
  }
}

void
Peer::onCollisionObserved()
{
  auto& s = *m_session;
  if (!m_config.peba || !s.md || !s.advertTimer || s.advertised || s.pebaMode)
    return;
  s.pebaMode = true;
  s.peba.onCollision();
  scheduleAdvertAfterCollision();
}

void
Peer::updateGate()
{
  auto& s = *m_session;
  if (!s.paused)
    return;
  double now = m_host.now();
  bool release = false;
  if (m_config.exchangeMode == ExchangeMode::Interleaved) {
    release = !s.heardFrom.empty();
  }
  else {
    release = s.heardFrom.size() >= m_config.bitmapsTarget;
    if (!release) {
      bool all = true;
      for (const auto& [id, n] : m_neighbors) {
        if (isFresh(n, now) && inCollection(n) && !s.heardFrom.count(id))
          all = false;
      }
      release = all;
    }
  }
  if (!release)
    return;
  s.paused = false;
  if (s.gateTimer) {
    m_host.cancel(*s.gateTimer);
    s.gateTimer.reset();
  }
  fillPipeline();
}

// ---------------------------------------------------------------------------
// Data fetching

void
Peer::refreshRarity()
{
  auto& s = *m_session;
  double now = m_host.now();
  if (!s.rarityDirty && now - s.rarityTime < 0.5)
    return;
  s.rarityDirty = false;
  s.rarityTime = now;

  std::vector<const Bitmap*> current;
  s.avail = Bitmap(s.own.size());
  for (const auto& [id, n] : m_neighbors) {
    if (!isFresh(n, now))
      continue;
    auto it = n.bitmaps.find(s.collection);
    if (it == n.bitmaps.end() || it->second.bitmap.size() != s.own.size() ||
        it->second.time < now - m_config.knowledgeTtl)
      continue;
    current.push_back(&it->second.bitmap);
    s.avail.unite(it->second.bitmap);
  }
  if (m_config.strategy == RpfStrategy::Local) {
    s.rarity = rarityLocal(s.own, current);
  }
  else {
    // availability is whatever the remembered encounters held
    s.rarity = rarityEncounter(s.own, s.history);
    s.avail = Bitmap(s.own.size());
    for (const auto& e : s.history.entries()) {
      if (e.bitmap.size() == s.own.size())
        s.avail.unite(e.bitmap);
    }
  }
}

bool
Peer::requestOne()
{
  auto& s = *m_session;
  double now = m_host.now();
  refreshRarity();

  Bitmap exclude = s.inFlightMask;
  exclude.unite(s.exhausted);
  exclude.unite(s.pendingVerify);

  Bitmap tier1 = s.avail;
  // complement of availability joined with the common exclusions
  Bitmap unavailable(s.own.size());
  unavailable.setAll();
  for (std::size_t g = 0; g < s.own.size(); ++g) {
    if (s.avail.test(g))
      unavailable.reset(g);
  }
  unavailable.unite(exclude);

  bool probe = false;
  auto g = nextRequest(s.own, s.rarity, unavailable, m_host.rng(), m_config.randomStart);
  if (!g) {
    bool neighborsNearby = false;
    for (const auto& [id, n] : m_neighbors)
      neighborsNearby = neighborsNearby || isFresh(n, now);
    std::size_t maxProbes = neighborsNearby ? m_config.pipelineDepth : 1;
    if (s.probes >= maxProbes)
      return false;
    g = nextRequest(s.own, s.rarity, exclude, m_host.rng(), m_config.randomStart);
    if (!g && s.exhausted.haveCount() > 0 && s.inFlight.empty()) {
      s.exhausted = Bitmap(s.own.size());
      g = nextRequest(s.own, s.rarity, s.inFlightMask, m_host.rng(), m_config.randomStart);
    }
    probe = true;
  }
  if (!g)
    return false;

  std::uint64_t index = *g;
  Name name = packetNameFromGlobalIndex(*s.md, index);
  double delay = m_host.rng().uniform(0.0, m_config.requestJitterMax);
  m_host.sendInterest(std::make_shared<const Packet>(makeInterest(name, nonce(m_host.rng()))), delay);
  auto timer = m_host.schedule(delay + m_config.pitLifetime, [this, index] { onRequestTimeout(index); });
  s.inFlight[index] = {timer, probe};
  s.inFlightMask.set(index);
  if (probe) {
    ++s.probes;
    ++m_counters.probeRequests;
  }
  ++m_counters.dataRequests;
  return true;
}

void
Peer::onRequestTimeout(std::uint64_t g)
{
  auto& s = *m_session;
  auto it = s.inFlight.find(g);
  if (it == s.inFlight.end())
    return;
  if (it->second.probe)
    --s.probes;
  s.inFlight.erase(it);
  s.inFlightMask.reset(g);
  ++m_counters.retransmissions;
  if (++s.attempts[g] >= m_config.maxAttempts)
    s.exhausted.set(g);
  fillPipeline();
}

void
Peer::fillPipeline()
{
  auto& s = *m_session;
  if (m_role != PeerRole::Downloader || !s.md || complete() || s.paused)
    return;
  double now = m_host.now();

  while (s.inFlight.size() < m_config.pipelineDepth) {
    if (m_config.exchangeMode == ExchangeMode::Interleaved && !s.advertTimer &&
        now - s.lastBitmapInterest > 2 * m_config.window) {
      std::size_t fresh = 0;
      for (const auto& [id, n] : m_neighbors)
        fresh += (isFresh(n, now) && inCollection(n)) ? 1 : 0;
      std::size_t target = std::min<std::size_t>(m_config.bitmapsTarget, fresh);
      if (s.heardFrom.size() < target && m_host.rng().bernoulli(0.5)) {
        s.lastBitmapInterest = now;
        sendAdvert(true);
        continue;
      }
    }
    if (!requestOne())
      break;
  }
}

void
Peer::accept(std::uint64_t g, const PacketPtr& data)
{
  auto& s = *m_session;
  s.own.set(g);
  s.store[g] = data;
  if (auto it = s.inFlight.find(g); it != s.inFlight.end()) {
    m_host.cancel(it->second.timer);
    if (it->second.probe)
      --s.probes;
    s.inFlight.erase(it);
    s.inFlightMask.reset(g);
  }
  if (s.own.full()) {
    m_completionTime = m_host.now();
    for (auto& [idx, req] : s.inFlight)
      m_host.cancel(req.timer);
    s.inFlight.clear();
    s.probes = 0;
    m_host.trace("complete", s.collection, "");
    m_host.onDownloadComplete();
  }
}

void
Peer::absorb(const PacketPtr& data)
{
  auto& s = *m_session;
  if (m_role == PeerRole::Repo || !s.md)
    return;
  auto g = globalIndexFromName(*s.md, s.order, data->name);
  if (!g)
    return;
  if (s.own.test(*g) || s.pendingVerify.test(*g)) {
    ++m_counters.duplicatePackets;
    return;
  }
  if (!s.inFlight.count(*g))
    ++m_counters.absorbedOverheard;

  auto result = verifyPacket(*s.md, *data, s.verify);
  switch (result.status) {
  case VerifyStatus::Accepted:
    if (s.md->format == MetadataFormat::DigestList) {
      accept(*g, data);
    }
    else {
      s.deferred[*g] = data;
      for (auto idx : result.settled) {
        s.pendingVerify.reset(idx);
        accept(idx, s.deferred[idx]);
        s.deferred.erase(idx);
      }
    }
    break;
  case VerifyStatus::Rejected:
    ++m_counters.rejectedPackets;
    m_host.trace("rejected", data->name, result.reason);
    for (auto idx : result.settled) {
      if (idx != *g) {
        s.pendingVerify.reset(idx);
        s.deferred.erase(idx);
      }
    }
    break;
  case VerifyStatus::Deferred:
    s.pendingVerify.set(*g);
    s.deferred[*g] = data;
    if (auto it = s.inFlight.find(*g); it != s.inFlight.end()) {
      m_host.cancel(it->second.timer);
      if (it->second.probe)
        --s.probes;
      s.inFlight.erase(it);
      s.inFlightMask.reset(*g);
    }
    break;
  }
  if (!complete())
    fillPipeline();
}

// ---------------------------------------------------------------------------
// Packet handlers

void
Peer::answer(const Packet& interest)
{
  auto& s = *m_session;
  if (!s.md || collectionOf(interest.name) != s.collection)
    return;
  double delay = m_host.rng().uniform(0.0, m_config.fwdJitterMax);
  if (isMetadataName(interest.name)) {
    std::uint64_t seq = 0;
    try {
      seq = toNumber(interest.name.back());
    }
    catch (const MalformedName&) {
      return;
    }
    if (seq < s.segments.size() && s.segments[seq])
      m_host.sendData(s.segments[seq], delay, true);
    return;
  }
  auto g = globalIndexFromName(*s.md, s.order, interest.name);
  if (g && s.own.test(*g))
    m_host.sendData(s.store[*g], delay, true);
}

Decision
Peer::decide(const Packet& interest, double now)
{
  auto& s = *m_session;
  Name collection = collectionOf(interest.name);
  double fwdDelay = m_host.rng().uniform(m_config.fwdJitterMax, 2 * m_config.fwdJitterMax);

  if (s.md && collection == s.collection) {
    if (isMetadataName(interest.name))
      return Decision::deliver();
    auto g = globalIndexFromName(*s.md, s.order, interest.name);
    if (!g)
      return Decision::suppress();
    if (s.own.test(*g))
      return Decision::deliver();
    for (const auto& [id, n] : m_neighbors) {
      if (n.lastHeard < now - m_config.knowledgeTtl)
        continue;
      auto it = n.bitmaps.find(collection);
      if (it != n.bitmaps.end() && it->second.time >= now - m_config.knowledgeTtl &&
          it->second.bitmap.size() == s.own.size() && it->second.bitmap.test(*g)) {
        ++m_counters.forwardKnowledge;
        return Decision::forward(fwdDelay);
      }
    }
    ++m_counters.suppressKnowledge;
    return Decision::suppress();
  }

  if (!collection.empty()) {
    bool known = false;
    if (auto it = m_seenNearby.find(collection); it != m_seenNearby.end() && it->second >= now - m_config.knowledgeTtl)
      known = true;
    Name mdPrefix = collection;
    mdPrefix.append("metadata");
    for (const auto& [id, n] : m_neighbors) {
      if (known || n.lastHeard < now - m_config.knowledgeTtl)
        continue;
      auto it = n.bitmaps.find(collection);
      if (it != n.bitmaps.end() && it->second.time >= now - m_config.knowledgeTtl && it->second.bitmap.haveCount() > 0)
        known = true;
      if (isMetadataName(interest.name) && n.collections.count(mdPrefix))
        known = true;
    }
    if (known) {
      ++m_counters.forwardKnowledge;
      return Decision::forward(fwdDelay);
    }
  }

  auto d = m_host.forwarder().pureForwardDecide(interest, now, m_config.forwardProbNoKnowledge, m_host.rng());
  if (d.kind == Decision::Forward)
    ++m_counters.forwardBlind;
  else
    ++m_counters.suppressBlind;
  return d;
}

void
Peer::onInterest(const PacketPtr& interest)
{
  const auto& name = interest->name;
  if (name == discoveryPrefix()) {
    onDiscoveryInterest(*interest);
    return;
  }
  if (isBitmapName(name)) {
    try {
      auto from = toNumber(name.back());
      onBitmap(from, collectionOf(name), Bitmap::decode(interest->payload), true);
    }
    catch (const std::exception&) {
    }
    return;
  }
  answer(*interest);
}

void
Peer::onData(const PacketPtr& data)
{
  const auto& name = data->name;
  if (isDiscoveryName(name)) {
    onDiscoveryData(*data);
    return;
  }
  Name collection = collectionOf(name);
  if (isBitmapName(name)) {
    try {
      auto from = toNumber(name.back());
      onBitmap(from, collection, Bitmap::decode(data->payload), false);
    }
    catch (const std::exception&) {
    }
    return;
  }
  auto& s = *m_session;
  if (isMetadataName(name)) {
    if (collection == s.collection && !s.md && !m_metadataFailed && m_role != PeerRole::Repo)
      onMetadataSegment(data);
    return;
  }
  if (s.md && collection == s.collection) {
    absorb(data);
    return;
  }
  if (!collection.empty())
    m_seenNearby[collection] = m_host.now();
}

} // namespace dapes

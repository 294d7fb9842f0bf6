#include "dapes/forwarder.hpp"

namespace dapes {

ContentStore::ContentStore(std::size_t capacity)
  : m_capacity(capacity)
{
}

void
ContentStore::insert(PacketPtr data)
{
  if (m_capacity == 0)
    return;
  auto it = m_index.find(data->name);
  if (it != m_index.end()) {
    m_lru.erase(it->second);
    m_index.erase(it);
  }
  m_lru.push_front(std::move(data));
  m_index.emplace(m_lru.front()->name, m_lru.begin());
  while (m_index.size() > m_capacity) {
    m_index.erase(m_lru.back()->name);
    m_lru.pop_back();
  }
}

PacketPtr
ContentStore::find(const Name& name)
{
  auto it = m_index.find(name);
  if (it == m_index.end())
    return nullptr;
  m_lru.splice(m_lru.begin(), m_lru, it->second);
  return *it->second;
}

void
ContentStore::forEach(const std::function<void(const PacketPtr&)>& fn) const
{
  for (const auto& p : m_lru)
    fn(p);
}

PitEntry*
Pit::find(const Name& name)
{
  auto it = m_entries.find(name);
  return it == m_entries.end() ? nullptr : &it->second;
}

PitEntry&
Pit::insert(const Name& name, double expiry)
{
  auto& e = m_entries[name];
  e.name = name;
  e.expiry = expiry;
  return e;
}

void
Fib::insert(const Name& prefix, FaceId face)
{
  auto& e = m_entries[prefix];
  e.prefix = prefix;
  e.faces.insert(face);
}

void
Fib::erase(const Name& prefix)
{
  m_entries.erase(prefix);
}

const FibEntry*
Fib::longestPrefixMatch(const Name& name) const
{
  for (std::size_t len = name.size() + 1; len-- > 0;) {
    auto it = m_entries.find(len == name.size() ? name : name.getPrefix(len));
    if (it != m_entries.end())
      return &it->second;
  }
  return nullptr;
}

void
SuppressionTable::install(const Name& name, double expiry)
{
  auto& t = m_timers[name];
  t = std::max(t, expiry);
}

bool
SuppressionTable::isSuppressed(const Name& name, double now) const
{
  auto it = m_timers.find(name);
  return it != m_timers.end() && now < it->second;
}

void
SuppressionTable::purge(double now)
{
  std::erase_if(m_timers, [now](const auto& kv) { return kv.second <= now; });
}

// ---------------------------------------------------------------------------

Forwarder::Forwarder(ForwarderConfig config)
  : m_config(config)
  , m_cs(config.csCapacity)
{
}

bool
Forwarder::isDuplicate(const Packet& interest, double now)
{
  NonceKey key{interest.name, interest.nonce};
  auto [it, inserted] = m_nonces.try_emplace(std::move(key), now + m_config.pitLifetime);
  if (inserted)
    return false;
  if (it->second > now)
    return true;
  it->second = now + m_config.pitLifetime;
  return false;
}

void
Forwarder::expire(const PitEntry& entry)
{
  if (entry.forwarded && entry.trackFailure) {
    m_suppression.install(entry.name, entry.forwardTime + m_config.pitLifetime + m_config.suppressDuration);
    ++m_counters.suppressionTimers;
  }
}

PitEntry*
Forwarder::livePit(const Name& name, double now)
{
  auto* e = m_pit.find(name);
  if (e != nullptr && e->expiry <= now) {
    expire(*e);
    m_pit.erase(name);
    return nullptr;
  }
  return e;
}

void
Forwarder::purge(double now)
{
  for (auto it = m_pit.entries().begin(); it != m_pit.entries().end();) {
    if (it->second.expiry <= now) {
      expire(it->second);
      it = m_pit.entries().erase(it);
    }
    else {
      ++it;
    }
  }
  std::erase_if(m_nonces, [now](const auto& kv) { return kv.second <= now; });
  m_suppression.purge(now);
}

void
Forwarder::maybePurge(double now)
{
  if (++m_ops % 1024 == 0)
    purge(now);
}

std::vector<Action>
Forwarder::onInterest(const PacketPtr& interest, FaceId inFace, double now, const InterestPolicy& policy)
{
  std::vector<Action> actions;
  ++m_counters.interestsIn;
  maybePurge(now);

  if (isDuplicate(*interest, now)) {
    ++m_counters.duplicates;
    return actions;
  }

  if (inFace != kAppFace && interest->hopLimit && *interest->hopLimit <= 1) {
    actions.push_back({Action::DeliverToApp, kAppFace, interest, 0});
    return actions;
  }

  if (auto hit = m_cs.find(interest->name)) {
    ++m_counters.cacheHits;
    ++m_counters.dataSent;
    actions.push_back({inFace == kAppFace ? Action::DeliverToApp : Action::SendData, inFace, hit, 0});
    return actions;
  }

  if (auto* entry = livePit(interest->name, now)) {
    entry->inFaces.insert(inFace);
    ++m_counters.aggregated;
    return actions;
  }

  Decision d = policy ? policy(*interest, inFace, now) : Decision::suppress();
  if (d.kind == Decision::Suppress) {
    ++m_counters.suppressed;
    return actions;
  }

  auto& entry = m_pit.insert(interest->name, now + m_config.pitLifetime);
  entry.inFaces.insert(inFace);
  entry.trackFailure = d.trackFailure;

  if (d.kind == Decision::DeliverToApp) {
    actions.push_back({Action::DeliverToApp, kAppFace, interest, 0});
    return actions;
  }

  const auto* route = m_fib.longestPrefixMatch(interest->name);
  if (route == nullptr) {
    ++m_counters.suppressed;
    m_pit.erase(interest->name);
    return actions;
  }

  PacketPtr out = interest;
  if (interest->hopLimit) {
    auto copy = *interest;
    copy.hopLimit = static_cast<std::uint8_t>(*interest->hopLimit - 1);
    out = std::make_shared<const Packet>(std::move(copy));
  }
  for (FaceId face : route->faces) {
    if (face == kAppFace || (face == inFace && inFace != kRadioFace))
      continue;
    ++m_counters.interestsForwarded;
    actions.push_back({Action::SendInterest, face, out, d.delay});
  }
  if (actions.empty())
    m_pit.erase(interest->name);
  return actions;
}

std::vector<Action>
Forwarder::onData(const PacketPtr& data, FaceId inFace, double now, bool cacheable)
{
  std::vector<Action> actions;
  ++m_counters.dataIn;
  maybePurge(now);

  // exact match first, then entries whose name is a proper prefix of the Data name
  for (std::size_t len = data->name.size() + 1; len-- > 0;) {
    Name key = len == data->name.size() ? data->name : data->name.getPrefix(len);
    auto* entry = livePit(key, now);
    if (entry == nullptr)
      continue;
    bool own = entry->inFaces.count(kAppFace) > 0;
    if (entry->forwarded && !own)
      ++m_counters.forwardsSatisfied;
    for (FaceId face : entry->inFaces) {
      if (face == inFace && !(face == kRadioFace && entry->forwarded))
        continue;
      if (face == kAppFace) {
        actions.push_back({Action::DeliverToApp, kAppFace, data, 0});
      }
      else {
        ++m_counters.dataSent;
        actions.push_back({Action::SendData, face, data, 0});
      }
    }
    m_pit.erase(key);
  }

  if (cacheable && inFace != kAppFace)
    m_cs.insert(data);
  return actions;
}

void
Forwarder::markForwarded(const Name& name, double now)
{
  auto* e = m_pit.find(name);
  if (e == nullptr)
    return;
  if (!e->forwarded && e->inFaces.count(kAppFace) == 0)
    ++m_counters.forwardsCompleted;
  e->forwarded = true;
  e->forwardTime = now;
  e->expiry = now + m_config.pitLifetime;
}

void
Forwarder::cancelForward(const Name& name)
{
  if (auto* e = m_pit.find(name))
    e->trackFailure = false;
}

Decision
Forwarder::pureForwardDecide(const Packet& interest, double now, double pFwd, Rng& rng)
{
  if (m_suppression.isSuppressed(interest.name, now))
    return Decision::suppress();
  if (!rng.bernoulli(pFwd))
    return Decision::suppress();
  return Decision::forward(rng.uniform(0.0, m_config.fwdJitterMax), true);
}

} // namespace dapes

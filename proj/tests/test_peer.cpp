#include "doctest.h"

#include "dapes/peer.hpp"
#include "dapes/sim.hpp"

using namespace dapes;

namespace {

// Host wired to a single partner over a perfect link: every packet reaches
// the other peer's application 1 ms after it is sent.
struct FakeHost : PeerHost
{
  FakeHost(sim::Scheduler& s, std::uint64_t seed)
    : sched(s)
    , random(seed)
  {
  }

  double
  now() const override
  {
    return sched.now();
  }

  Rng&
  rng() override
  {
    return random;
  }

  TimerId
  schedule(double delay, std::function<void()> fn) override
  {
    return sched.after(delay, std::move(fn));
  }

  void
  cancel(TimerId id) override
  {
    sched.cancel(id);
  }

  void
  sendInterest(PacketPtr interest, double delay) override
  {
    sent.push_back(interest);
    if (partner != nullptr && link)
      sched.after(delay + 0.001, [this, interest] {
        if (link)
          partner->peer->onInterest(interest);
      });
  }

  void
  sendData(PacketPtr data, double delay, bool) override
  {
    if (corrupt && data->name == *corrupt) {
      auto copy = *data;
      copy.payload[3] ^= 1;
      data = std::make_shared<const Packet>(std::move(copy));
      corrupt.reset();
    }
    sent.push_back(data);
    if (partner != nullptr && link)
      sched.after(delay + 0.001, [this, data] {
        if (link) {
          partner->fwd.cs().insert(data);
          partner->peer->onData(data);
        }
      });
  }

  Forwarder&
  forwarder() override
  {
    return fwd;
  }

  void
  trace(const std::string&, const Name&, const std::string&) override
  {
  }

  void
  onDownloadComplete() override
  {
    ++completions;
  }

  std::size_t
  count(PacketKind kind, bool (*pred)(const Name&)) const
  {
    std::size_t n = 0;
    for (const auto& p : sent)
      n += p->kind == kind && pred(p->name);
    return n;
  }

  sim::Scheduler& sched;
  Rng random;
  Forwarder fwd;
  std::unique_ptr<Peer> peer;
  FakeHost* partner = nullptr;
  bool link = true;
  std::optional<Name> corrupt; ///< next Data with this name goes out damaged
  std::vector<PacketPtr> sent;
  int completions = 0;
};

struct Fixture
{
  std::shared_ptr<KeyedHashSigner> repoKey = std::make_shared<KeyedHashSigner>("repo", toBytes("s3cret"));
  std::shared_ptr<TrustStore> trust = std::make_shared<TrustStore>();
  std::shared_ptr<const Collection> collection;
  CollectionMetadata md;
  std::vector<PacketPtr> segments;
  sim::Scheduler sched;
  FakeHost repo{sched, 1};
  FakeHost down{sched, 2};

  explicit Fixture(PeerConfig cfg = {}, MetadataFormat format = MetadataFormat::DigestList)
  {
    trust->add(toBytes("repo"), repoKey);
    std::vector<FileSpec> files;
    for (int f = 0; f < 3; ++f) {
      Bytes content(700 + 100 * f);
      for (std::size_t i = 0; i < content.size(); ++i)
        content[i] = static_cast<std::uint8_t>(i * 7 + f);
      files.push_back({"file" + std::to_string(f), content});
    }
    collection = std::make_shared<Collection>(buildCollection(Name::parse("/col"), files, 128, *repoKey));
    std::tie(md, segments) = buildMetadata(*collection, format, DigestAlgorithm::Sha256, *repoKey);

    repo.peer = std::make_unique<Peer>(repo, 1, cfg, collection, md, segments, trust, repoKey);
    down.peer = std::make_unique<Peer>(down, 2, PeerRole::Downloader, cfg, Name::parse("/col"), trust,
                                       std::make_shared<KeyedHashSigner>("node2", toBytes("n2")));
    repo.partner = &down;
    down.partner = &repo;
  }

  void
  runUntil(double t)
  {
    while (auto next = sched.peekTime()) {
      if (*next > t)
        break;
      sched.runNext();
    }
  }
};

bool
isData(const Name& n)
{
  return !isDiscoveryName(n) && !isBitmapName(n) && !isMetadataName(n);
}

} // namespace

TEST_SUITE("peer")
{
  TEST_CASE("config validation names the field")
  {
    PeerConfig c;
    CHECK_NOTHROW(c.validate());
    c.forwardProbNoKnowledge = 1.5;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("forwardProbNoKnowledge"), std::invalid_argument);
    c = PeerConfig{};
    c.pipelineDepth = 0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("pipelineDepth"), std::invalid_argument);
    c = PeerConfig{};
    c.discoveryPeriodMax = 0.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("protocol names")
  {
    auto b = bitmapName(Name::parse("/a/col"), 17);
    CHECK(b.toUri() == "/a/col/bitmap/17");
    CHECK(isBitmapName(b));
    CHECK(collectionOf(b) == Name::parse("/a/col"));
    CHECK(isMetadataName(Name::parse("/a/col/metadata/0")));
    CHECK_FALSE(isMetadataName(Name::parse("/a/col/f/0")));
    CHECK(isDiscoveryName(Name::parse("/dapes/discovery/4")));
    CHECK(collectionOf(Name::parse("/x/y")).empty());
  }

  TEST_CASE("discovery payloads round-trip")
  {
    CHECK(decodeDiscoveryParams(encodeDiscoveryParams(123456)) == 123456);
    std::vector<Name> names{Name::parse("/a/metadata"), Name::parse("/b/c/metadata")};
    auto [id, back] = decodeDiscoveryContent(encodeDiscoveryContent(9, names));
    CHECK(id == 9);
    CHECK(back == names);
    CHECK(decodeDiscoveryContent(encodeDiscoveryContent(3, {})).second.empty());
  }

  TEST_CASE("repo answers discovery with its metadata prefix")
  {
    Fixture fx;
    fx.repo.partner = nullptr;
    Packet probe = makeInterest(discoveryPrefix(), 5, encodeDiscoveryParams(77));
    probe.hopLimit = 1;
    fx.repo.peer->onInterest(std::make_shared<const Packet>(probe));
    fx.runUntil(1);
    REQUIRE(fx.repo.sent.size() == 1);
    auto reply = fx.repo.sent[0];
    CHECK(reply->isData());
    CHECK(reply->name == Name::parse("/dapes/discovery/1"));
    auto [id, names] = decodeDiscoveryContent(reply->payload);
    CHECK(id == 1);
    REQUIRE(names.size() == 1);
    CHECK(names[0] == Name::parse("/col/metadata"));
    CHECK(fx.repo.peer->neighbors().count(77) == 1);
  }

  TEST_CASE("downloader completes over a perfect link, both strategies and modes")
  {
    for (auto mode : {ExchangeMode::Interleaved, ExchangeMode::BitmapsFirst}) {
      for (auto strategy : {RpfStrategy::Local, RpfStrategy::Encounter}) {
        PeerConfig cfg;
        cfg.exchangeMode = mode;
        cfg.strategy = strategy;
        Fixture fx(cfg);
        fx.repo.peer->start();
        fx.down.peer->start();
        fx.runUntil(60);
        CHECK(fx.down.peer->hasMetadata());
        REQUIRE(fx.down.peer->complete());
        CHECK(fx.down.completions == 1);
        for (std::size_t f = 0; f < 3; ++f)
          CHECK(fx.down.peer->fileContent(f) == fx.collection->reassemble(f));
        CHECK(fx.down.peer->counters().rejectedPackets == 0);
        // every collection packet requested at least once, none more than a few times
        auto requests = fx.down.count(PacketKind::Interest, isData);
        CHECK(requests >= fx.collection->totalPackets());
        CHECK(requests < 2 * fx.collection->totalPackets());
      }
    }
  }

  TEST_CASE("Merkle metadata: packets settle at file completion")
  {
    Fixture fx({}, MetadataFormat::MerkleRoots);
    fx.repo.peer->start();
    fx.down.peer->start();
    fx.runUntil(60);
    REQUIRE(fx.down.peer->complete());
    CHECK(fx.down.peer->fileContent(2) == fx.collection->reassemble(2));
  }

  TEST_CASE("forged metadata is dropped and counted")
  {
    Fixture fx;
    auto forger = std::make_shared<KeyedHashSigner>("repo", toBytes("wrong"));
    auto [md, segs] = buildMetadata(*fx.collection, MetadataFormat::DigestList, DigestAlgorithm::Sha256, *forger);
    fx.repo.peer = std::make_unique<Peer>(fx.repo, 1, PeerConfig{}, fx.collection, md, segs, fx.trust, forger);
    fx.repo.peer->start();
    fx.down.peer->start();
    fx.runUntil(30);
    CHECK_FALSE(fx.down.peer->hasMetadata());
    CHECK(fx.down.peer->counters().signatureFailures >= 1);
    CHECK(fx.down.count(PacketKind::Interest, isData) == 0);
  }

  TEST_CASE("preloaded metadata: no metadata fetch, download starts at once")
  {
    Fixture fx;
    REQUIRE(fx.down.peer->preloadMetadata(fx.md, fx.segments));
    CHECK_FALSE(fx.down.peer->hasMetadata()); // installed on start
    fx.repo.peer->start();
    fx.down.peer->start();
    CHECK(fx.down.peer->hasMetadata());
    CHECK(fx.down.peer->inFlightCount() > 0);
    fx.runUntil(60);
    REQUIRE(fx.down.peer->complete());
    CHECK(fx.down.count(PacketKind::Interest, isMetadataName) == 0);
    CHECK(fx.down.peer->fileContent(0) == fx.collection->reassemble(0));
  }

  TEST_CASE("preloaded metadata is verified")
  {
    Fixture fx;
    auto forger = std::make_shared<KeyedHashSigner>("repo", toBytes("wrong"));
    auto [md, segs] = buildMetadata(*fx.collection, MetadataFormat::DigestList, DigestAlgorithm::Sha256, *forger);
    CHECK_FALSE(fx.down.peer->preloadMetadata(md, segs));
    CHECK(fx.down.peer->counters().signatureFailures == 1);
    CHECK_FALSE(fx.repo.peer->preloadMetadata(fx.md, fx.segments));
  }

  TEST_CASE("a damaged collection packet is rejected and fetched again")
  {
    Fixture fx;
    fx.repo.corrupt = Name::parse("/col/file1/2");
    fx.repo.peer->start();
    fx.down.peer->start();
    fx.runUntil(60);
    REQUIRE(fx.down.peer->complete());
    CHECK(fx.down.peer->counters().rejectedPackets == 1);
    CHECK(fx.down.peer->fileContent(1) == fx.collection->reassemble(1));
  }

  TEST_CASE("knowledge-based forwarding decisions")
  {
    PeerConfig cfg;
    cfg.forwardProbNoKnowledge = 0.0;
    Fixture fx(cfg);
    fx.repo.peer->start();
    fx.down.peer->start();
    fx.runUntil(60);
    REQUIRE(fx.down.peer->complete());
    // holder answers locally
    auto mine = fx.down.peer->decide(*std::make_shared<const Packet>(makeInterest(Name::parse("/col/file0/0"), 1)),
                                     fx.sched.now());
    CHECK(mine.kind == Decision::DeliverToApp);
    // unknown collection with p = 0: never forwarded
    auto other = fx.down.peer->decide(makeInterest(Name::parse("/zzz/f/0"), 2), fx.sched.now());
    CHECK(other.kind == Decision::Suppress);
  }
}

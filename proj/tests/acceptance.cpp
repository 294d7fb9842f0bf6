// Acceptance checks: one PASS/FAIL line per criterion.
//   dapes_acceptance            all criteria
//   dapes_acceptance --only N   criterion N (exit status reflects it)

#include "golden.hpp"

#include "dapes/advertisement.hpp"
#include "dapes/cli.hpp"
#include "dapes/collection.hpp"
#include "dapes/forwarder.hpp"
#include "dapes/kernels.hpp"
#include "dapes/scheduling.hpp"
#include "dapes/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace dapes;
using sim::RunReport;
using sim::ScenarioConfig;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string
fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));

std::string
fmt(const char* f, ...)
{
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------------------
// statistics

double
median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

/// P(X >= wins) for X ~ Binomial(n, 1/2).
double
binomialTail(unsigned wins, unsigned n)
{
  double total = 0;
  for (unsigned k = wins; k <= n; ++k) {
    double c = 1;
    for (unsigned i = 0; i < k; ++i)
      c = c * (n - i) / (i + 1);
    total += c;
  }
  return total / std::pow(2.0, n);
}

struct SignTest
{
  unsigned wins = 0;
  unsigned losses = 0;
  unsigned ties = 0;
  double p = 1;
  double medianDiff = 0; ///< median of (better - worse) per pair; negative favors `better`

  bool
  significant() const
  {
    return p < 0.05 && medianDiff < 0;
  }

  std::string
  str() const
  {
    return fmt("%u wins/%u losses/%u ties, p=%.4f, median diff %+.3f", wins, losses, ties, p, medianDiff);
  }
};

/// One-sided: is `a` smaller than `b` seed by seed?
SignTest
signTestLess(const std::vector<double>& a, const std::vector<double>& b)
{
  SignTest t;
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff.push_back(a[i] - b[i]);
    if (a[i] < b[i])
      ++t.wins;
    else if (a[i] > b[i])
      ++t.losses;
    else
      ++t.ties;
  }
  t.p = binomialTail(t.wins, t.wins + t.losses);
  t.medianDiff = median(diff);
  return t;
}

// ---------------------------------------------------------------------------
// desk-scale scenario

struct Desk
{
  ScenarioConfig base;
  std::vector<std::uint64_t> seeds;
};

const Desk&
desk()
{
  static Desk d = [] {
    auto loaded = cli::loadConfig(std::string(DAPES_CONFIG_DIR) + "/desk_scale.cfg");
    return Desk{loaded.scenario, loaded.seeds};
  }();
  return d;
}

/// The range sweep; the two largest points feed the PEBA check.
const std::vector<double> kRanges{40, 50, 60, 70};

std::vector<RunReport>
runAll(const ScenarioConfig& c)
{
  return cli::runSeeds(c, desk().seeds, 0);
}

/// Every seed at every sweep range, range-major; pairs line up across variants.
std::vector<RunReport>
runSweep(const ScenarioConfig& c)
{
  std::vector<RunReport> out;
  for (double range : kRanges) {
    auto d = c;
    d.medium.range = range;
    auto rs = runAll(d);
    out.insert(out.end(), rs.begin(), rs.end());
  }
  return out;
}

/// Per-run value over the matching baseline run; puts all ranges on one scale.
std::vector<double>
ratios(const std::vector<double>& v, const std::vector<double>& base)
{
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(v[i] / base[i]);
  return out;
}

std::vector<double>
meanTimes(const std::vector<RunReport>& rs)
{
  std::vector<double> out;
  for (const auto& r : rs)
    out.push_back(r.meanDownloadTime());
  return out;
}

std::vector<double>
transmissions(const std::vector<RunReport>& rs)
{
  std::vector<double> out;
  for (const auto& r : rs)
    out.push_back(static_cast<double>(r.totalTransmissions()));
  return out;
}

std::string
completion(const std::vector<RunReport>& rs)
{
  std::size_t done = 0, total = 0;
  for (const auto& r : rs) {
    done += r.completedDownloaders();
    total += r.downloadTimes().size();
  }
  return fmt("%zu/%zu downloads", done, total);
}

// ---------------------------------------------------------------------------
// criteria

Outcome
c1()
{
  bool formula = metadataSubnamesBytes(1000, 4, 20, 8) == 32000;
  KeyedHashSigner key("repo", toBytes("k"));
  Bytes content(1024 * 1024);
  Rng rng(1);
  for (auto& b : content)
    b = static_cast<std::uint8_t>(rng.next());
  auto c = buildCollection(Name::parse("/damaged-bridge-1533783192"), {{"bridge-picture", content}}, 1024, key);
  auto segs = buildMetadata(c, MetadataFormat::DigestList, DigestAlgorithm::Sha1, key).second;
  return {formula && segs.size() >= 32,
          fmt("subname bytes %llu, digest-list metadata in %zu packets",
              static_cast<unsigned long long>(metadataSubnamesBytes(1000, 4, 20, 8)), segs.size())};
}

Outcome
c2()
{
  KeyedHashSigner key("repo", toBytes("k"));
  Bytes content(1024 * 1024, 0x5A);
  auto c = buildCollection(Name::parse("/damaged-bridge-1533783192"), {{"bridge-picture", content}}, 1024, key);
  auto [md, segs] = buildMetadata(c, MetadataFormat::MerkleRoots, DigestAlgorithm::Sha256, key);
  return {segs.size() == 1, fmt("Merkle metadata %zu bytes in %zu packet(s)", serializeMetadata(md).blob.size(),
                                segs.size())};
}

Outcome
c3()
{
  bool zero = rpfEffectiveness(5000, 0) == 0.0;
  double one = rpfEffectiveness(5000, 1);
  bool mono = true;
  for (std::uint64_t n : {2ULL, 10ULL, 1000ULL, 5000ULL, 1000000ULL}) {
    double prev = -1;
    for (std::uint64_t k = 0; k <= 64; ++k) {
      double e = rpfEffectiveness(n, k);
      mono = mono && e >= prev;
      prev = e;
    }
  }
  return {zero && one >= 0.99 && mono, fmt("eta(5000,0)=%g, eta(5000,1)=%.6f, monotone=%d",
                                           rpfEffectiveness(5000, 0), one, mono)};
}

Outcome
c4()
{
  auto start = std::chrono::steady_clock::now();
  const double tau = 0.001;
  bool ok = true;
  std::string detail;
  for (auto [L, k] : {std::pair{8u, 2u}, std::pair{16u, 2u}, std::pair{16u, 4u}}) {
    kernels::ContentionSetup setup;
    setup.slots = L;
    setup.groups = k;
    setup.slotDuration = tau;
    for (unsigned j = 0; j < k; ++j)
      setup.peerGroups.push_back(j);
    auto stats = kernels::contentionParallel(setup, 100000, 4242 + L * 10 + k);
    unsigned n = L / k;
    double worst = 0;
    for (unsigned j = 0; j < k; ++j) {
      // mean slot start of a peer alone in group j
      double analog = (j * n + (n - 1) / 2.0) * tau;
      double rel = std::abs(stats.meanDelay(j) - analog) / analog;
      worst = std::max(worst, rel);
    }
    ok = ok && worst < 0.05;
    detail += fmt("(L=%u,k=%u) worst rel err %.4f, closed form %.5f s; ", L, k, worst,
                  expectedTransmitDelay(L, k, tau));
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  detail += fmt("%.2f s", secs);
  return {ok && secs < 30, detail};
}

Outcome
c5()
{
  Rng rng(5);
  std::size_t ok = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::string> comps;
    for (std::size_t c = 0, n = rng.uniformInt(1, 5); c < n; ++c) {
      std::string s;
      for (std::size_t k = 0, len = rng.uniformInt(1, rng.bernoulli(0.05) ? 300 : 10); k < len; ++k)
        s.push_back(static_cast<char>('a' + rng.uniformInt(0, 25)));
      comps.push_back(s);
    }
    Packet p;
    Bytes payload(rng.uniformInt(0, 1200));
    for (auto& b : payload)
      b = static_cast<std::uint8_t>(rng.next());
    if (rng.bernoulli(0.5)) {
      p = makeInterest(Name(comps), static_cast<std::uint32_t>(rng.next()), payload);
      if (rng.bernoulli(0.5))
        p.hopLimit = static_cast<std::uint8_t>(rng.uniformInt(0, 255));
    }
    else {
      p = makeData(Name(comps), payload);
      if (rng.bernoulli(0.5)) {
        p.sigInfo = SignatureInfo{toBytes("key" + std::to_string(i % 7)), SignatureScheme::KeyedHashSha256};
        p.sigValue = Bytes(32, static_cast<std::uint8_t>(i));
      }
    }
    auto wire = encodePacket(p);
    ok += decodePacket(wire) == p && wire.size() == encodedSize(p);
  }

  std::size_t goldenOk = 0, goldenTotal = 0;
  for (const auto& [label, wire] : test::goldenHex("packets.txt")) {
    ++goldenTotal;
    try {
      goldenOk += encodePacket(decodePacket(wire)) == wire;
    }
    catch (const std::exception&) {
    }
  }
  return {ok == 10000 && goldenOk == goldenTotal && goldenTotal > 0,
          fmt("%zu/10000 round trips, %zu/%zu golden vectors stable", ok, goldenOk, goldenTotal)};
}

Outcome
c6()
{
  KeyedHashSigner key("repo", toBytes("k"));
  Bytes content(3 * 512 - 17);
  for (std::size_t i = 0; i < content.size(); ++i)
    content[i] = static_cast<std::uint8_t>(i * 31);
  auto c = buildCollection(Name::parse("/col"), {{"file", content}}, 512, key);
  const auto& pkts = c.files()[0].packets;
  std::size_t flips = 0, rejected = 0;
  for (auto format : {MetadataFormat::DigestList, MetadataFormat::MerkleRoots}) {
    auto md = buildMetadata(c, format, DigestAlgorithm::Sha256, key).first;
    for (std::size_t p = 0; p < pkts.size(); ++p) {
      for (std::size_t b = 0; b < pkts[p]->payload.size(); ++b) {
        Packet bad = *pkts[p];
        bad.payload[b] ^= 0x01;
        // the other packets arrive first, so Merkle verification completes on the bad one
        VerifyContext ctx;
        for (std::size_t q = 0; q < pkts.size(); ++q) {
          if (q != p)
            verifyPacket(md, *pkts[q], ctx);
        }
        ++flips;
        rejected += verifyPacket(md, bad, ctx).status == VerifyStatus::Rejected;
      }
    }
  }
  return {pkts.size() == 3 && flips == rejected, fmt("%zu/%zu flips rejected over both formats", rejected, flips)};
}

Outcome
c7()
{
  // PIT aggregation
  Forwarder f;
  f.fib().insert(Name(), kRadioFace);
  auto fwd = [](const Packet&, FaceId, double) { return Decision::forward(0, true); };
  auto i1 = std::make_shared<const Packet>(makeInterest(Name::parse("/c/f/0"), 1));
  auto i2 = std::make_shared<const Packet>(makeInterest(Name::parse("/c/f/0"), 2));
  bool aggregation = f.onInterest(i1, kAppFace, 0, fwd).size() == 1 && f.onInterest(i2, 5, 0.1, fwd).empty();
  f.markForwarded(i1->name, 0);
  auto out = f.onData(std::make_shared<const Packet>(makeData(i1->name, {})), kRadioFace, 0.2);
  aggregation = aggregation && out.size() == 2;

  // suppression: installed only for unanswered tracked forwards, lifted on expiry
  Forwarder g;
  g.fib().insert(Name(), kRadioFace);
  auto lost = std::make_shared<const Packet>(makeInterest(Name::parse("/c/f/9"), 3));
  g.onInterest(lost, kRadioFace, 0, fwd);
  g.markForwarded(lost->name, 0);
  auto answered = std::make_shared<const Packet>(makeInterest(Name::parse("/c/f/8"), 4));
  g.onInterest(answered, kRadioFace, 0, fwd);
  g.markForwarded(answered->name, 0);
  g.onData(std::make_shared<const Packet>(makeData(answered->name, {})), kRadioFace, 0.5);
  double end = g.config().pitLifetime + g.config().suppressDuration;
  g.purge(g.config().pitLifetime + 0.01);
  bool suppression = g.suppression().isSuppressed(lost->name, 1.0 + g.config().pitLifetime) &&
                     !g.suppression().isSuppressed(answered->name, 1.0 + g.config().pitLifetime) &&
                     !g.suppression().isSuppressed(lost->name, end + 0.01);

  // PEBA replay: 6 missing; C=3, B=2, D=1
  PebaState st;
  st.groups = 2;
  st.onCollision();
  Rng rng(7);
  unsigned sc = pebaAssignSlot(st, 3, 6, rng), sb = pebaAssignSlot(st, 2, 6, rng), sd = pebaAssignSlot(st, 1, 6, rng);
  bool first = st.slots() == 2 && sc == 0 && sb == 1 && sd == 1;
  st.onCollision();
  bool second = st.slots() == 4;
  for (int i = 0; i < 1000 && second; ++i) {
    unsigned b2 = pebaAssignSlot(st, 2, 3, rng), d2 = pebaAssignSlot(st, 1, 3, rng);
    second = b2 <= 1 && (d2 == 2 || d2 == 3);
  }
  return {aggregation && suppression && first && second,
          fmt("aggregation=%d suppression=%d replay round1 C->%u B->%u D->%u round2 ok=%d", aggregation, suppression,
              sc, sb, sd, second)};
}

Outcome
c8()
{
  KeyedHashSigner key("repo", toBytes("k"));
  auto c = buildCollection(Name::parse("/damaged-bridge-1533783192"),
                           {{"bridge-picture", Bytes(100 * 1024, 1)}, {"bridge-location", Bytes(30 * 1024, 2)}}, 1024,
                           key);
  auto md = buildMetadata(c, MetadataFormat::DigestList, DigestAlgorithm::Sha256, key).first;
  auto order = md.ordering();
  Name second0 = Name::parse("/damaged-bridge-1533783192/bridge-location/0");
  Name second1 = Name::parse("/damaged-bridge-1533783192/bridge-location/1");
  bool ok = packetNameFromGlobalIndex(md, 100) == second0 && globalIndexFromName(md, order, second0) == 100u &&
            globalIndexFromName(md, order, second1) == 101u;
  return {ok, "global index 100 <-> " + packetNameFromGlobalIndex(md, 100).toUri()};
}

Outcome
c9()
{
  std::string detail;
  bool ok = true;
  for (auto mode : {ExchangeMode::Interleaved, ExchangeMode::BitmapsFirst}) {
    for (auto strategy : {RpfStrategy::Local, RpfStrategy::Encounter}) {
      ScenarioConfig c;
      c.nodes = {{sim::NodeRole::Repo, {10, 10}, false}, {sim::NodeRole::Downloader, {40, 10}, false}};
      c.files = 2;
      c.fileSize = 20 * 1024;
      c.medium.lossRate = 0;
      c.maxSimTime = 300;
      c.peer.exchangeMode = mode;
      c.peer.strategy = strategy;
      auto r = sim::runScenario(c, 1);
      bool done = !r.timedOut && r.completedDownloaders() == 1;
      ok = ok && done;
      detail += fmt("%s/%s %s; ", mode == ExchangeMode::Interleaved ? "interleaved" : "bitmaps-first",
                    strategy == RpfStrategy::Local ? "local" : "encounter",
                    done ? fmt("%.2fs", *r.nodes[1].completionTime).c_str() : "timeout");
    }
  }

  // A - K - J: A already holds the metadata, K is interested in another
  // collection and relays, J is the repository; A and J are out of range
  ScenarioConfig c;
  sim::NodeSpec a{sim::NodeRole::Downloader, {10, 10}, false};
  a.hasMetadata = true;
  c.nodes = {a, {sim::NodeRole::Intermediate, {60, 10}, false}, {sim::NodeRole::Repo, {110, 10}, false}};
  c.files = 1;
  c.fileSize = 50 * 1024;
  c.medium.lossRate = 0;
  c.peer.pipelineDepth = 1; // no Interest from A overlaps J's Data at K
  c.maxSimTime = 600;
  std::ostringstream trace;
  auto r = sim::runScenario(c, 1, &trace);
  auto completed = r.nodes[1].forwardsCompleted;
  auto satisfied = r.nodes[1].forwardsSatisfied;

  // per name: K's forwards, K's relayed Data, J's Data, J's Data lost at K
  struct Tally
  {
    int fwd = 0, relayed = 0, answered = 0, collided = 0;
  };
  std::map<std::string, Tally> names;
  std::istringstream lines(trace.str());
  for (std::string line; std::getline(lines, line);) {
    std::vector<std::string> f;
    std::istringstream cols(line);
    for (std::string col; std::getline(cols, col, '\t');)
      f.push_back(col);
    if (f.size() < 5)
      continue;
    auto& t = names[f[3]];
    if (f[1] == "1" && f[2] == "tx" && f[4] == "fwd_interest")
      ++t.fwd;
    else if (f[1] == "1" && f[2] == "tx" && f[4] == "fwd_data")
      ++t.relayed;
    else if (f[1] == "2" && f[2] == "tx" && f[4] == "data")
      ++t.answered;
    else if (f[1] == "1" && f[2] == "collision" && f[4] == "2")
      ++t.collided;
  }
  int unanswered = 0, unexplained = 0, lostAtK = 0;
  for (const auto& [name, t] : names) {
    unanswered += std::max(0, t.fwd - t.answered);
    int missing = std::max(0, t.fwd - t.relayed);
    lostAtK += std::min(missing, t.collided);
    unexplained += std::max(0, missing - t.collided);
  }
  bool chain = !r.timedOut && completed > 0 && unanswered == 0 && unexplained == 0;
  detail += fmt("chain: %s, K forwarded %llu, satisfied %llu (%.1f%%), J answered all: %s, "
                "unsatisfied lost to collisions at K: %d, otherwise unsatisfied: %d",
                r.timedOut ? "timeout" : "complete", static_cast<unsigned long long>(completed),
                static_cast<unsigned long long>(satisfied),
                completed ? 100.0 * static_cast<double>(satisfied) / static_cast<double>(completed) : 0.0,
                unanswered == 0 ? "yes" : "no", lostAtK, unexplained);
  return {ok && chain, detail};
}

Outcome
c10()
{
  auto local = desk().base;
  local.peer.strategy = RpfStrategy::Local;
  auto enc = local;
  enc.peer.strategy = RpfStrategy::Encounter;
  auto a = meanTimes(runSweep(local));
  auto b = meanTimes(runSweep(enc));
  auto t = signTestLess(a, b);
  return {t.significant(), fmt("local median %.2fs vs encounter %.2fs; ", median(a), median(b)) + t.str()};
}

Outcome
c11()
{
  auto rnd = desk().base;
  rnd.peer.randomStart = true;
  auto low = rnd;
  low.peer.randomStart = false;
  auto a = meanTimes(runSweep(rnd));
  auto b = meanTimes(runSweep(low));
  auto t = signTestLess(a, b);
  return {t.significant(), fmt("random start median %.2fs vs lowest index %.2fs; ", median(a), median(b)) + t.str()};
}

Outcome
c12()
{
  std::vector<double> on, off;
  std::string detail;
  for (std::size_t i = 0; i < kRanges.size(); ++i) {
    auto c = desk().base;
    c.medium.range = kRanges[i];
    c.peer.peba = true;
    auto a = transmissions(runAll(c));
    c.peer.peba = false;
    auto b = transmissions(runAll(c));
    detail += fmt("range %.0f: %.0f vs %.0f; ", kRanges[i], median(a), median(b));
    if (i + 2 >= kRanges.size()) {
      on.insert(on.end(), a.begin(), a.end());
      off.insert(off.end(), b.begin(), b.end());
    }
  }
  auto t = signTestLess(on, off);
  return {t.significant(), detail + "two largest pooled: " + t.str()};
}

Outcome
c13()
{
  auto inter = desk().base;
  inter.peer.exchangeMode = ExchangeMode::Interleaved;
  inter.peer.bitmapsTarget = 3;
  auto first = inter;
  first.peer.exchangeMode = ExchangeMode::BitmapsFirst;
  first.peer.bitmapsTarget = 1000000;
  auto a = meanTimes(runSweep(inter));
  auto b = meanTimes(runSweep(first));
  auto t = signTestLess(a, b);
  return {t.significant(),
          fmt("interleaved b=3 median %.2fs vs bitmaps-first/all %.2fs; ", median(a), median(b)) + t.str()};
}

Outcome
c14()
{
  const std::vector<double> probs{0.0, 0.2, 0.4, 0.6};
  std::vector<std::vector<double>> times, txs;
  std::string detail;
  for (double p : probs) {
    auto c = desk().base;
    c.peer.forwardProbNoKnowledge = p;
    auto rs = runSweep(c);
    times.push_back(meanTimes(rs));
    txs.push_back(transmissions(rs));
    detail += fmt("p=%.1f: %.2fs, %.0f tx (%s); ", p, median(times.back()), median(txs.back()),
                  completion(rs).c_str());
  }
  // medians of each run relative to its p=0 twin
  bool mono = true;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    mono = mono && median(ratios(times[i], times[0])) <= median(ratios(times[i - 1], times[0])) &&
           median(ratios(txs[i], txs[0])) >= median(ratios(txs[i - 1], txs[0]));
  }
  detail += "time ratios";
  for (const auto& t : times)
    detail += fmt(" %.4f", median(ratios(t, times[0])));
  detail += ", tx ratios";
  for (const auto& t : txs)
    detail += fmt(" %.4f", median(ratios(t, txs[0])));
  detail += "; ";
  auto faster = signTestLess(times.back(), times.front());
  auto cheaper = signTestLess(txs.front(), txs.back());
  detail += fmt("monotone=%d; time 0.6<0: ", mono) + faster.str() + "; tx 0<0.6: " + cheaper.str();
  return {mono && faster.significant() && cheaper.significant(), detail};
}

Outcome
c15()
{
  auto c = desk().base;
  auto once = [&](int jobs) {
    std::ostringstream trace, csv;
    auto r = sim::runScenario(c, desk().seeds.front(), &trace);
    auto batch = cli::runSeeds(c, {desk().seeds.front(), desk().seeds.back()}, jobs);
    cli::writeCsvRows(csv, batch);
    csv << cli::toJson({r});
    return std::pair{trace.str(), csv.str()};
  };
  auto [t1, m1] = once(1);
  auto [t2, m2] = once(2);
  bool ok = !t1.empty() && t1 == t2 && m1 == m2;
  return {ok, fmt("trace %zu bytes identical=%d, metrics identical=%d", t1.size(), t1 == t2, m1 == m2)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria{
  {"metadata subname size and digest-list segmentation", c1},
  {"Merkle metadata fits one packet", c2},
  {"RPF effectiveness bounds and monotonicity", c3},
  {"slotted contention agrees with the per-group delay", c4},
  {"codec round trip and golden vectors", c5},
  {"tamper completeness", c6},
  {"PIT aggregation, suppression and PEBA replay", c7},
  {"bitmap global ordering", c8},
  {"liveness: static pair and relay chain", c9},
  {"local RPF beats encounter-based", c10},
  {"random start beats lowest index", c11},
  {"PEBA reduces transmissions at the largest ranges", c12},
  {"interleaved b=3 beats bitmaps-first/all", c13},
  {"forwarding probability trade-off", c14},
  {"determinism of traces and metrics", c15},
};

} // namespace

int
main(int argc, char** argv)
{
  std::size_t only = 0;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc)
      only = std::stoul(argv[++i]);
    else {
      std::cerr << "usage: dapes_acceptance [--only N]\n";
      return 2;
    }
  }
  if (only > kCriteria.size()) {
    std::cerr << "no criterion " << only << "\n";
    return 2;
  }

  int failures = 0;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (only != 0 && only != i + 1)
      continue;
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = kCriteria[i].second();
    }
    catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " - " << kCriteria[i].first << " ["
              << o.detail << "] (" << fmt("%.1f", secs) << " s)" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

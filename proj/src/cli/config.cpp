#include "dapes/cli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace dapes::cli {

namespace {

std::string
trim(std::string s)
{
  auto notSpace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notSpace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notSpace).base(), s.end());
  return s;
}

std::string
lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void
bad(const std::string& key, const std::string& value, const std::string& expected)
{
  throw ConfigError("bad value '" + value + "' for key '" + key + "' (expected " + expected + ")");
}

double
toDouble(const std::string& key, const std::string& v)
{
  double out = 0;
  auto s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    bad(key, v, "a number");
  return out;
}

std::uint64_t
toUnsigned(const std::string& key, const std::string& v)
{
  std::uint64_t out = 0;
  auto s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    bad(key, v, "a nonnegative integer");
  return out;
}

bool
toBool(const std::string& key, const std::string& v)
{
  auto s = lower(trim(v));
  if (s == "true" || s == "on" || s == "yes" || s == "1")
    return true;
  if (s == "false" || s == "off" || s == "no" || s == "0")
    return false;
  bad(key, v, "on/off");
}

sim::NodeRole
toRole(const std::string& key, const std::string& v)
{
  auto s = lower(v);
  if (s == "repo")
    return sim::NodeRole::Repo;
  if (s == "downloader")
    return sim::NodeRole::Downloader;
  if (s == "forwarder")
    return sim::NodeRole::PureForwarder;
  if (s == "intermediate")
    return sim::NodeRole::Intermediate;
  bad(key, v, "repo|downloader|forwarder|intermediate");
}

std::vector<sim::NodeSpec>
toLayout(const std::string& key, const std::string& v)
{
  std::vector<sim::NodeSpec> out;
  std::stringstream entries(v);
  std::string entry;
  while (std::getline(entries, entry, ',')) {
    std::istringstream fields(entry);
    std::string role, x, y, flag;
    if (!(fields >> role >> x >> y))
      bad(key, entry, "'role x y [mobile|static] [metadata]'");
    sim::NodeSpec spec;
    spec.role = toRole(key, role);
    spec.pos = {toDouble(key, x), toDouble(key, y)};
    while (fields >> flag) {
      if (flag == "mobile" || flag == "static")
        spec.mobile = flag == "mobile";
      else if (flag == "metadata" && spec.role == sim::NodeRole::Downloader)
        spec.hasMetadata = true;
      else
        bad(key, entry, "'mobile', 'static' or 'metadata' (downloaders only)");
    }
    out.push_back(spec);
  }
  if (out.empty())
    bad(key, v, "at least one node");
  return out;
}

using Setter = std::function<void(LoadedConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>&
setters()
{
  using C = LoadedConfig;
  using K = const std::string&;
  static const std::map<std::string, Setter> table = {
    {"nodes.repos", [](C& c, K k, K v) { c.scenario.repos = toUnsigned(k, v); }},
    {"nodes.downloaders", [](C& c, K k, K v) { c.scenario.downloaders = toUnsigned(k, v); }},
    {"nodes.pure_forwarders", [](C& c, K k, K v) { c.scenario.pureForwarders = toUnsigned(k, v); }},
    {"nodes.intermediates", [](C& c, K k, K v) { c.scenario.intermediates = toUnsigned(k, v); }},
    {"nodes.layout", [](C& c, K k, K v) { c.scenario.nodes = toLayout(k, v); }},

    {"collection.name", [](C& c, K, K v) { c.scenario.collection = trim(v); }},
    {"collection.other_name", [](C& c, K, K v) { c.scenario.otherCollection = trim(v); }},
    {"collection.files", [](C& c, K k, K v) { c.scenario.files = toUnsigned(k, v); }},
    {"collection.file_size", [](C& c, K k, K v) { c.scenario.fileSize = toUnsigned(k, v); }},
    {"collection.packet_size", [](C& c, K k, K v) { c.scenario.packetSize = toUnsigned(k, v); }},
    {"collection.metadata_format",
     [](C& c, K k, K v) {
       auto s = lower(trim(v));
       if (s == "digest-list")
         c.scenario.metadataFormat = MetadataFormat::DigestList;
       else if (s == "merkle")
         c.scenario.metadataFormat = MetadataFormat::MerkleRoots;
       else
         bad(k, v, "digest-list|merkle");
     }},
    {"collection.digest",
     [](C& c, K k, K v) {
       auto s = lower(trim(v));
       if (s == "sha256")
         c.scenario.digest = DigestAlgorithm::Sha256;
       else if (s == "sha1")
         c.scenario.digest = DigestAlgorithm::Sha1;
       else if (s == "truncated24")
         c.scenario.digest = DigestAlgorithm::Truncated24;
       else
         bad(k, v, "sha256|sha1|truncated24");
     }},

    {"medium.range", [](C& c, K k, K v) { c.scenario.medium.range = toDouble(k, v); }},
    {"medium.loss_rate", [](C& c, K k, K v) { c.scenario.medium.lossRate = toDouble(k, v); }},
    {"medium.data_rate", [](C& c, K k, K v) { c.scenario.medium.dataRate = toDouble(k, v); }},

    {"mobility.arena_width", [](C& c, K k, K v) { c.scenario.mobility.arenaWidth = toDouble(k, v); }},
    {"mobility.arena_height", [](C& c, K k, K v) { c.scenario.mobility.arenaHeight = toDouble(k, v); }},
    {"mobility.speed_min", [](C& c, K k, K v) { c.scenario.mobility.speedMin = toDouble(k, v); }},
    {"mobility.speed_max", [](C& c, K k, K v) { c.scenario.mobility.speedMax = toDouble(k, v); }},
    {"mobility.redraw_period", [](C& c, K k, K v) { c.scenario.mobility.redrawPeriod = toDouble(k, v); }},
    {"mobility.tick", [](C& c, K k, K v) { c.scenario.mobility.tick = toDouble(k, v); }},

    {"peer.exchange_mode",
     [](C& c, K k, K v) {
       auto s = lower(trim(v));
       if (s == "interleaved")
         c.scenario.peer.exchangeMode = ExchangeMode::Interleaved;
       else if (s == "bitmaps-first")
         c.scenario.peer.exchangeMode = ExchangeMode::BitmapsFirst;
       else
         bad(k, v, "interleaved|bitmaps-first");
     }},
    {"peer.bitmaps_target",
     [](C& c, K k, K v) {
       auto s = lower(trim(v));
       if (s == "all")
         c.scenario.peer.bitmapsTarget = std::numeric_limits<unsigned>::max();
       else
         c.scenario.peer.bitmapsTarget = static_cast<unsigned>(toUnsigned(k, v));
     }},
    {"peer.strategy",
     [](C& c, K k, K v) {
       auto s = lower(trim(v));
       if (s == "local")
         c.scenario.peer.strategy = RpfStrategy::Local;
       else if (s == "encounter")
         c.scenario.peer.strategy = RpfStrategy::Encounter;
       else
         bad(k, v, "local|encounter");
     }},
    {"peer.random_start", [](C& c, K k, K v) { c.scenario.peer.randomStart = toBool(k, v); }},
    {"peer.discovery_period_min", [](C& c, K k, K v) { c.scenario.peer.discoveryPeriodMin = toDouble(k, v); }},
    {"peer.discovery_period_max", [](C& c, K k, K v) { c.scenario.peer.discoveryPeriodMax = toDouble(k, v); }},
    {"peer.pipeline_depth",
     [](C& c, K k, K v) { c.scenario.peer.pipelineDepth = static_cast<unsigned>(toUnsigned(k, v)); }},
    {"peer.forward_prob_no_knowledge",
     [](C& c, K k, K v) { c.scenario.peer.forwardProbNoKnowledge = toDouble(k, v); }},
    {"peer.window", [](C& c, K k, K v) { c.scenario.peer.window = toDouble(k, v); }},
    {"peer.peba", [](C& c, K k, K v) { c.scenario.peer.peba = toBool(k, v); }},
    {"peer.peba_groups",
     [](C& c, K k, K v) { c.scenario.peer.pebaGroups = static_cast<unsigned>(toUnsigned(k, v)); }},
    {"peer.slot_duration", [](C& c, K k, K v) { c.scenario.peer.slotDuration = toDouble(k, v); }},
    {"peer.knowledge_ttl", [](C& c, K k, K v) { c.scenario.peer.knowledgeTtl = toDouble(k, v); }},
    {"peer.encounter_timeout", [](C& c, K k, K v) { c.scenario.peer.encounterTimeout = toDouble(k, v); }},
    {"peer.history_capacity", [](C& c, K k, K v) { c.scenario.peer.historyCapacity = toUnsigned(k, v); }},
    {"peer.max_attempts",
     [](C& c, K k, K v) { c.scenario.peer.maxAttempts = static_cast<unsigned>(toUnsigned(k, v)); }},
    {"peer.max_bitmap_attempts",
     [](C& c, K k, K v) { c.scenario.peer.maxBitmapAttempts = static_cast<unsigned>(toUnsigned(k, v)); }},
    {"peer.bitmap_phase_timeout", [](C& c, K k, K v) { c.scenario.peer.bitmapPhaseTimeout = toDouble(k, v); }},
    {"peer.request_jitter_max", [](C& c, K k, K v) { c.scenario.peer.requestJitterMax = toDouble(k, v); }},
    {"peer.pit_lifetime", [](C& c, K k, K v) { c.scenario.peer.pitLifetime = toDouble(k, v); }},
    {"peer.fwd_jitter_max", [](C& c, K k, K v) { c.scenario.peer.fwdJitterMax = toDouble(k, v); }},

    {"forwarder.cs_capacity", [](C& c, K k, K v) { c.scenario.csCapacity = toUnsigned(k, v); }},
    {"forwarder.suppress_duration", [](C& c, K k, K v) { c.scenario.suppressDuration = toDouble(k, v); }},

    {"run.seeds", [](C& c, K, K v) { c.seeds = parseSeedList(v); }},
    {"run.max_sim_time", [](C& c, K k, K v) { c.scenario.maxSimTime = toDouble(k, v); }},
  };
  return table;
}

/// 1-based line of `key = ...` inside `[section]`, or 0.
std::size_t
findLine(const std::string& text, const std::string& section, const std::string& key)
{
  std::istringstream in(text);
  std::string line;
  std::string current;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto t = trim(line);
    if (t.size() > 2 && t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      continue;
    }
    auto eq = t.find('=');
    if (eq != std::string::npos && current == section && trim(t.substr(0, eq)) == key)
      return n;
  }
  return 0;
}

} // namespace

std::vector<std::uint64_t>
parseSeedList(const std::string& text)
{
  std::vector<std::uint64_t> out;
  std::stringstream parts(text);
  std::string part;
  while (std::getline(parts, part, ',')) {
    part = trim(part);
    if (part.empty())
      continue;
    auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(toUnsigned("seeds", part));
      continue;
    }
    auto lo = toUnsigned("seeds", part.substr(0, dots));
    auto hi = toUnsigned("seeds", part.substr(dots + 2));
    if (lo > hi)
      bad("seeds", part, "an increasing range");
    for (auto s = lo; s <= hi; ++s)
      out.push_back(s);
  }
  if (out.empty())
    bad("seeds", text, "at least one seed");
  return out;
}

void
applySetting(LoadedConfig& config, const std::string& key, const std::string& value)
{
  auto it = setters().find(key);
  if (it == setters().end())
    throw ConfigError("unknown key '" + key + "'");
  it->second(config, key, value);
}

std::string
sweepKey(const std::string& param)
{
  static const std::map<std::string, std::string> keys = {
    {"range", "medium.range"},
    {"forwardProbNoKnowledge", "peer.forward_prob_no_knowledge"},
    {"b", "peer.bitmaps_target"},
    {"strategy", "peer.strategy"},
    {"exchangeMode", "peer.exchange_mode"},
    {"peba", "peer.peba"},
  };
  auto it = keys.find(param);
  if (it == keys.end())
    throw ConfigError("parameter '" + param + "' is not sweepable");
  return it->second;
}

LoadedConfig
parseConfig(const std::string& text)
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  }
  catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  LoadedConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("unknown key '" + section + "' (keys must be inside a section)");
    }
    for (const auto& [key, value] : body) {
      std::string full = section + "." + key;
      try {
        applySetting(config, full, value.data());
      }
      catch (const ConfigError& e) {
        auto line = findLine(text, section, key);
        throw ConfigError(line ? "line " + std::to_string(line) + ": " + e.what() : std::string(e.what()));
      }
    }
  }
  config.scenario.validate();
  return config;
}

LoadedConfig
loadConfig(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parseConfig(buf.str());
}

} // namespace dapes::cli

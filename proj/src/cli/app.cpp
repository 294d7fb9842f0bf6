#include "dapes/cli.hpp"
#include "dapes/kernels.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace dapes::cli {

namespace fs = std::filesystem;
using sim::kTxCategories;
using sim::NodeRole;
using sim::TxCategory;

std::vector<RunReport>
runSeeds(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds, int jobs,
         const std::string& traceDir)
{
  std::vector<RunReport> out(seeds.size());
  kernels::runBatch(seeds.size(), jobs, [&](std::size_t i) {
    if (traceDir.empty()) {
      out[i] = sim::runScenario(config, seeds[i]);
      return;
    }
    std::ofstream trace(fs::path(traceDir) / ("trace-" + std::to_string(seeds[i]) + ".tsv"), std::ios::binary);
    out[i] = sim::runScenario(config, seeds[i], &trace);
  });
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string
fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string
catColumn(std::size_t c)
{
  return "tx_" + sim::categoryName(static_cast<TxCategory>(c));
}

struct SeedSummary
{
  double completed;
  double downloadTime;
  std::array<double, kTxCategories> tx;
  double total;
  double collisions;
  double forwardsCompleted;
  double forwardsSatisfied;
  double ratio;
};

SeedSummary
summarize(const RunReport& r)
{
  SeedSummary s{};
  s.completed = static_cast<double>(r.completedDownloaders());
  s.downloadTime = r.meanDownloadTime();
  auto tx = r.txByCategory();
  for (std::size_t c = 0; c < kTxCategories; ++c)
    s.tx[c] = static_cast<double>(tx[c]);
  s.total = static_cast<double>(r.totalTransmissions());
  s.collisions = static_cast<double>(r.totalCollisions());
  for (const auto& n : r.nodes) {
    s.forwardsCompleted += static_cast<double>(n.forwardsCompleted);
    s.forwardsSatisfied += static_cast<double>(n.forwardsSatisfied);
  }
  s.ratio = r.forwardSuccessRatio();
  return s;
}

} // namespace

std::string
csvHeader()
{
  std::string h = "schema_version,row_type,sweep_param,sweep_value,seed,node,role,peer_id,completed,download_time";
  for (std::size_t c = 0; c < kTxCategories; ++c)
    h += "," + catColumn(c);
  h += ",tx_total,collisions,forwards_completed,forwards_satisfied,forward_success_ratio,timed_out";
  return h;
}

double
percentile(std::vector<double> values, double p)
{
  if (values.empty())
    return 0;
  std::sort(values.begin(), values.end());
  double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, values.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

void
writeCsvRows(std::ostream& out, const std::vector<RunReport>& reports, const std::string& sweepParam,
             const std::string& sweepValue)
{
  std::string prefix = std::to_string(kCsvSchemaVersion);
  auto lead = [&](const std::string& type) { return prefix + "," + type + "," + sweepParam + "," + sweepValue; };

  std::vector<SeedSummary> summaries;
  for (const auto& r : reports) {
    for (const auto& n : r.nodes) {
      bool downloader = n.role == NodeRole::Downloader;
      out << lead("node") << ',' << r.seed << ',' << n.index << ',' << sim::roleName(n.role) << ',' << n.peerId
          << ',' << (downloader ? (n.completionTime ? "1" : "0") : "") << ','
          << (n.completionTime ? fmt(*n.completionTime) : "");
      for (auto t : n.tx)
        out << ',' << t;
      double ratio = n.forwardsCompleted == 0
                       ? 0.0
                       : static_cast<double>(n.forwardsSatisfied) / static_cast<double>(n.forwardsCompleted);
      out << ',' << n.totalTx() << ',' << n.collisionsObserved << ',' << n.forwardsCompleted << ','
          << n.forwardsSatisfied << ',' << fmt(ratio) << ",\n";
    }
    auto s = summarize(r);
    summaries.push_back(s);
    out << lead("seed") << ',' << r.seed << ",,,," << static_cast<std::uint64_t>(s.completed) << ','
        << fmt(s.downloadTime);
    for (auto t : s.tx)
      out << ',' << static_cast<std::uint64_t>(t);
    out << ',' << static_cast<std::uint64_t>(s.total) << ',' << static_cast<std::uint64_t>(s.collisions) << ','
        << static_cast<std::uint64_t>(s.forwardsCompleted) << ',' << static_cast<std::uint64_t>(s.forwardsSatisfied)
        << ',' << fmt(s.ratio) << ',' << (r.timedOut ? 1 : 0) << '\n';
  }

  auto p90 = [&](auto field) {
    std::vector<double> v;
    for (const auto& s : summaries)
      v.push_back(field(s));
    return fmt(percentile(v, 90));
  };
  std::size_t timedOut = 0;
  for (const auto& r : reports)
    timedOut += r.timedOut ? 1 : 0;
  out << lead("p90") << ",,,,," << p90([](const SeedSummary& s) { return s.completed; }) << ','
      << p90([](const SeedSummary& s) { return s.downloadTime; });
  for (std::size_t c = 0; c < kTxCategories; ++c)
    out << ',' << p90([c](const SeedSummary& s) { return s.tx[c]; });
  out << ',' << p90([](const SeedSummary& s) { return s.total; }) << ','
      << p90([](const SeedSummary& s) { return s.collisions; }) << ','
      << p90([](const SeedSummary& s) { return s.forwardsCompleted; }) << ','
      << p90([](const SeedSummary& s) { return s.forwardsSatisfied; }) << ','
      << p90([](const SeedSummary& s) { return s.ratio; }) << ',' << timedOut << '\n';
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::ordered_json
txJson(const std::array<std::uint64_t, kTxCategories>& tx)
{
  nlohmann::ordered_json j;
  for (std::size_t c = 0; c < kTxCategories; ++c)
    j[sim::categoryName(static_cast<TxCategory>(c))] = tx[c];
  return j;
}

nlohmann::ordered_json
runsJson(const std::vector<RunReport>& reports)
{
  auto runs = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json run;
    run["seed"] = r.seed;
    run["end_time"] = r.endTime;
    run["timed_out"] = r.timedOut;
    run["events"] = r.events;
    run["completed_downloaders"] = r.completedDownloaders();
    run["mean_download_time"] = r.meanDownloadTime();
    run["tx_total"] = r.totalTransmissions();
    run["tx"] = txJson(r.txByCategory());
    run["collisions"] = r.totalCollisions();
    run["forward_success_ratio"] = r.forwardSuccessRatio();
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : r.nodes) {
      nlohmann::ordered_json node;
      node["index"] = n.index;
      node["role"] = sim::roleName(n.role);
      node["peer_id"] = n.peerId;
      node["download_time"] = n.completionTime ? nlohmann::ordered_json(*n.completionTime) : nullptr;
      node["tx"] = txJson(n.tx);
      node["collisions"] = n.collisionsObserved;
      node["forwards_completed"] = n.forwardsCompleted;
      node["forwards_satisfied"] = n.forwardsSatisfied;
      node["signature_failures"] = n.signatureFailures;
      node["rejected_packets"] = n.rejectedPackets;
      node["retransmissions"] = n.retransmissions;
      node["bitmap_collisions"] = n.bitmapCollisions;
      nodes.push_back(node);
    }
    run["nodes"] = nodes;
    runs.push_back(run);
  }
  return runs;
}

} // namespace

std::string
toJson(const std::vector<RunReport>& reports, const std::string& sweepParam,
       const std::vector<std::string>& sweepValues)
{
  nlohmann::ordered_json j;
  j["schema_version"] = kCsvSchemaVersion;
  if (sweepParam.empty()) {
    j["runs"] = runsJson(reports);
  }
  else {
    // reports are grouped value-major, equal counts per value
    j["sweep_param"] = sweepParam;
    auto groups = nlohmann::ordered_json::array();
    std::size_t per = sweepValues.empty() ? 0 : reports.size() / sweepValues.size();
    for (std::size_t v = 0; v < sweepValues.size(); ++v) {
      std::vector<RunReport> slice(reports.begin() + static_cast<std::ptrdiff_t>(v * per),
                                   reports.begin() + static_cast<std::ptrdiff_t>((v + 1) * per));
      groups.push_back({{"value", sweepValues[v]}, {"runs", runsJson(slice)}});
    }
    j["values"] = groups;
  }
  return j.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Command line

namespace {

std::string
defaultOutDir()
{
  if (const char* env = std::getenv("DAPES_SIM_OUT"); env != nullptr && *env != '\0')
    return env;
  return ".";
}

std::vector<std::string>
splitValues(const std::string& text)
{
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    auto b = part.find_first_not_of(" \t");
    auto e = part.find_last_not_of(" \t");
    if (b != std::string::npos)
      out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

void
writeFile(const fs::path& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

std::string
number(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

} // namespace

int
main(int argc, char** argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"DAPES file-sharing simulator"};
  app.require_subcommand(1);

  std::string configPath, seedsText, outDir = defaultOutDir(), traceDir, param, valuesText;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "run one scenario over a seed list");
  run->add_option("config", configPath, "scenario config (INI)")->required();
  run->add_option("--seeds", seedsText, "seed list, e.g. 1..10 or 1,4,7");
  run->add_option("--out", outDir, "output directory (default: $DAPES_SIM_OUT or .)");
  run->add_option("--jobs", jobs, "worlds run in parallel")->check(CLI::PositiveNumber);
  run->add_option("--trace", traceDir, "directory for per-seed event traces");

  auto* sweep = app.add_subcommand("sweep", "run a scenario once per parameter value");
  sweep->add_option("config", configPath, "scenario config (INI)")->required();
  sweep->add_option("--param", param, "range|forwardProbNoKnowledge|b|strategy|exchangeMode|peba")->required();
  sweep->add_option("--values", valuesText, "comma-separated values")->required();
  sweep->add_option("--seeds", seedsText, "seed list");
  sweep->add_option("--out", outDir, "output directory");
  sweep->add_option("--jobs", jobs, "worlds run in parallel")->check(CLI::PositiveNumber);

  auto* oracle = app.add_subcommand("oracle", "closed-form models");
  oracle->require_subcommand(1);
  std::vector<double> args;
  std::string mode;
  auto* mdSize = oracle->add_subcommand("metadata-size", "subname bytes: N indexBytes digestBytes framingBytes");
  mdSize->add_option("values", args)->expected(4)->required();
  auto* tdelay = oracle->add_subcommand("tdelay", "expected PEBA transmit delay: L k tau");
  tdelay->add_option("values", args)->expected(3)->required();
  auto* eta = oracle->add_subcommand("eta", "rarest-first effectiveness: N k");
  eta->add_option("values", args)->expected(2)->required();
  auto* fetch = oracle->add_subcommand("fetch-time", "data fetch time: deltaT tDelay d b mode");
  std::vector<std::string> fetchArgs;
  fetch->add_option("values", fetchArgs, "deltaT tDelay d b interleaved|bitmaps-first")->expected(5)->required();

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  }
  catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*oracle) {
      auto whole = [](double v, const char* what) {
        if (v < 0 || v != std::floor(v))
          throw DomainError(std::string(what) + " must be a nonnegative integer");
        return static_cast<std::uint64_t>(v);
      };
      if (*mdSize) {
        out << metadataSubnamesBytes(whole(args[0], "N"), whole(args[1], "indexBytes"),
                                     whole(args[2], "digestBytes"), whole(args[3], "framingBytes"))
            << "\n";
      }
      else if (*tdelay) {
        out << number(expectedTransmitDelay(static_cast<unsigned>(whole(args[0], "L")),
                                            static_cast<unsigned>(whole(args[1], "k")), args[2]))
            << "\n";
      }
      else if (*eta) {
        out << number(rpfEffectiveness(whole(args[0], "N"), whole(args[1], "k"))) << "\n";
      }
      else if (*fetch) {
        for (std::size_t i = 0; i < 4; ++i) {
          try {
            std::size_t used = 0;
            args.push_back(std::stod(fetchArgs[i], &used));
            if (used != fetchArgs[i].size())
              throw std::invalid_argument(fetchArgs[i]);
          }
          catch (const std::logic_error&) {
            throw DomainError("'" + fetchArgs[i] + "' is not a number");
          }
        }
        mode = fetchArgs[4];
        ExchangeMode m;
        if (mode == "interleaved")
          m = ExchangeMode::Interleaved;
        else if (mode == "bitmaps-first")
          m = ExchangeMode::BitmapsFirst;
        else
          throw DomainError("mode must be interleaved or bitmaps-first");
        out << number(dataFetchTime(args[0], args[1], args[2], whole(args[3], "b"), m)) << "\n";
      }
      return 0;
    }

    LoadedConfig config = loadConfig(configPath);
    if (!seedsText.empty())
      config.seeds = parseSeedList(seedsText);
    fs::create_directories(outDir);
    if (!traceDir.empty())
      fs::create_directories(traceDir);

    if (*run) {
      auto reports = runSeeds(config.scenario, config.seeds, jobs, traceDir);
      std::ostringstream csv;
      csv << csvHeader() << "\n";
      writeCsvRows(csv, reports);
      writeFile(fs::path(outDir) / "metrics.csv", csv.str());
      writeFile(fs::path(outDir) / "metrics.json", toJson(reports));
      for (const auto& r : reports) {
        out << "seed " << r.seed << ": " << r.completedDownloaders() << " downloads complete, mean time "
            << number(r.meanDownloadTime()) << " s, " << r.totalTransmissions() << " transmissions"
            << (r.timedOut ? " (timed out)" : "") << "\n";
      }
      return 0;
    }

    auto key = sweepKey(param);
    auto values = splitValues(valuesText);
    if (values.empty())
      throw ConfigError("--values is empty");
    std::vector<LoadedConfig> variants;
    for (const auto& v : values) {
      auto c = config;
      applySetting(c, key, v);
      c.scenario.validate();
      variants.push_back(std::move(c));
    }
    std::ostringstream csv;
    csv << csvHeader() << "\n";
    std::vector<RunReport> all;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      auto reports = runSeeds(variants[i].scenario, config.seeds, jobs);
      writeCsvRows(csv, reports, param, values[i]);
      std::vector<double> times, tx;
      for (const auto& r : reports) {
        times.push_back(r.meanDownloadTime());
        tx.push_back(static_cast<double>(r.totalTransmissions()));
      }
      out << param << "=" << values[i] << ": median download time " << number(percentile(times, 50))
          << " s, median transmissions " << number(percentile(tx, 50)) << "\n";
      all.insert(all.end(), reports.begin(), reports.end());
    }
    writeFile(fs::path(outDir) / "sweep.csv", csv.str());
    writeFile(fs::path(outDir) / "sweep.json", toJson(all, param, values));
    return 0;
  }
  catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 2;
  }
  catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return 2;
  }
  catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace dapes::cli

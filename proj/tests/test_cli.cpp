#include "doctest.h"
#include "golden.hpp"

#include "dapes/cli.hpp"

#include <filesystem>
#include <sstream>

using namespace dapes;
namespace fs = std::filesystem;

namespace {

int
runCli(std::vector<std::string> args, std::string* outText = nullptr, std::string* errText = nullptr)
{
  args.insert(args.begin(), "dapes-sim");
  std::vector<char*> argv;
  for (auto& a : args)
    argv.push_back(a.data());
  std::ostringstream out, err;
  int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (outText)
    *outText = out.str();
  if (errText)
    *errText = err.str();
  return code;
}

fs::path
scratchDir(const std::string& name)
{
  auto p = fs::temp_directory_path() / ("dapes-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string>
lines(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    out.push_back(l);
  return out;
}

} // namespace

TEST_SUITE("cli")
{
  TEST_CASE("config parsing")
  {
    auto c = cli::parseConfig("[medium]\nrange = 90\nloss_rate=0.2\n[peer]\nbitmaps_target = all\nstrategy = encounter\n"
                              "[run]\nseeds = 3..5\n");
    CHECK(c.scenario.medium.range == 90);
    CHECK(c.scenario.medium.lossRate == doctest::Approx(0.2));
    CHECK(c.scenario.peer.strategy == RpfStrategy::Encounter);
    CHECK(c.scenario.peer.bitmapsTarget > 1000);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 4, 5});

    auto l = cli::parseConfig("[nodes]\nlayout = downloader 1 2 static metadata, repo 3 4, forwarder 5 6 mobile\n");
    REQUIRE(l.scenario.nodes.size() == 3);
    CHECK(l.scenario.nodes[0].hasMetadata);
    CHECK_FALSE(l.scenario.nodes[0].mobile);
    CHECK(l.scenario.nodes[1].role == sim::NodeRole::Repo);
    CHECK(l.scenario.nodes[2].mobile);
    CHECK_THROWS_AS(cli::parseConfig("[nodes]\nlayout = repo 1 2 metadata\n"), cli::ConfigError);
    CHECK_THROWS_AS(cli::parseConfig("[nodes]\nlayout = downloader 1 2 flying\n"), cli::ConfigError);

    auto d = cli::parseConfig("");
    CHECK(d.seeds == std::vector<std::uint64_t>{1});
    CHECK(d.scenario.medium.range == sim::ScenarioConfig{}.medium.range);
  }

  TEST_CASE("config errors carry the key and line")
  {
    CHECK_THROWS_WITH_AS(cli::parseConfig("[medium]\nrange = 60\nbogus = 1\n"),
                         doctest::Contains("line 3: unknown key 'medium.bogus'"), cli::ConfigError);
    CHECK_THROWS_WITH_AS(cli::parseConfig("[medium]\nrange = far\n"), doctest::Contains("medium.range"),
                         cli::ConfigError);
    CHECK_THROWS_WITH_AS(cli::parseConfig("[peer]\nstrategy = fastest\n"), doctest::Contains("peer.strategy"),
                         cli::ConfigError);
    CHECK_THROWS_AS(cli::parseConfig("[medium\nrange = 60\n"), cli::ConfigError);
    CHECK_THROWS_AS(cli::parseConfig("[medium]\nrange = -5\n"), cli::ConfigError);
  }

  TEST_CASE("seed lists")
  {
    CHECK(cli::parseSeedList("1..3,7") == std::vector<std::uint64_t>{1, 2, 3, 7});
    CHECK(cli::parseSeedList(" 4 ") == std::vector<std::uint64_t>{4});
    CHECK_THROWS_AS(cli::parseSeedList(""), cli::ConfigError);
    CHECK_THROWS_AS(cli::parseSeedList("5..2"), cli::ConfigError);
    CHECK_THROWS_AS(cli::parseSeedList("x"), cli::ConfigError);
  }

  TEST_CASE("static pair, interleaved b=2: event trace is pinned")
  {
    auto c = cli::loadConfig(test::testdataPath("pair.cfg"));
    c.scenario.peer.exchangeMode = ExchangeMode::Interleaved;
    c.scenario.peer.bitmapsTarget = 2;
    std::ostringstream trace;
    auto r = sim::runScenario(c.scenario, 1, &trace);
    CHECK(r.completedDownloaders() == 1);
    CHECK(trace.str() == test::readFile(test::testdataPath("pair_interleaved_b2.trace")));
  }

  TEST_CASE("sweepable parameters")
  {
    for (auto p : {"range", "forwardProbNoKnowledge", "b", "strategy", "exchangeMode", "peba"})
      CHECK_FALSE(cli::sweepKey(p).empty());
    CHECK_THROWS_AS(cli::sweepKey("arena"), cli::ConfigError);
  }

  TEST_CASE("csv header is frozen")
  {
    auto golden = test::readFile(test::testdataPath("csv_header.txt"));
    CHECK(cli::csvHeader() + "\n" == golden);
  }

  TEST_CASE("percentile interpolates linearly")
  {
    CHECK(cli::percentile({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 90) == doctest::Approx(9.1));
    CHECK(cli::percentile({5}, 90) == 5);
    CHECK(cli::percentile({3, 1, 2}, 50) == 2);
  }

  TEST_CASE("run writes node, seed and aggregate rows")
  {
    auto dir = scratchDir("run");
    std::string out, err;
    int code = runCli({"run", test::testdataPath("pair.cfg"), "--seeds", "1..2", "--out", dir.string()}, &out, &err);
    REQUIRE(code == 0);
    auto csv = lines(test::readFile((dir / "metrics.csv").string()));
    REQUIRE(csv.size() == 1 + 2 * 2 + 2 + 1);
    CHECK(csv[0] == cli::csvHeader());
    int node = 0, seed = 0, p90 = 0;
    for (std::size_t i = 1; i < csv.size(); ++i) {
      node += csv[i].rfind("1,node,", 0) == 0;
      seed += csv[i].rfind("1,seed,", 0) == 0;
      p90 += csv[i].rfind("1,p90,", 0) == 0;
    }
    CHECK(node == 4);
    CHECK(seed == 2);
    CHECK(p90 == 1);
    CHECK(fs::exists(dir / "metrics.json"));

    // identical inputs give identical files
    auto dir2 = scratchDir("run2");
    REQUIRE(runCli({"run", test::testdataPath("pair.cfg"), "--seeds", "1..2", "--out", dir2.string(), "--jobs", "2"}) ==
            0);
    CHECK(test::readFile((dir / "metrics.csv").string()) == test::readFile((dir2 / "metrics.csv").string()));
    CHECK(test::readFile((dir / "metrics.json").string()) == test::readFile((dir2 / "metrics.json").string()));
  }

  TEST_CASE("exit codes")
  {
    auto dir = scratchDir("codes");
    auto bad = dir / "bad.cfg";
    {
      std::ofstream f(bad);
      f << "[medium]\nrange = 60\nbogus = 1\n";
    }
    std::string out, err;
    CHECK(runCli({"run", bad.string(), "--out", dir.string()}, &out, &err) == 2);
    CHECK(err.find("medium.bogus") != std::string::npos);
    CHECK(runCli({"run", (dir / "missing.cfg").string()}) == 2);
    CHECK(runCli({"sweep", test::testdataPath("pair.cfg"), "--param", "range", "--values", "", "--out",
                  dir.string()}) == 2);
    CHECK(runCli({"sweep", test::testdataPath("pair.cfg"), "--param", "arena", "--values", "1", "--out",
                  dir.string()}) == 2);
    CHECK(runCli({"oracle", "eta", "1", "1"}) == 2);
    CHECK(runCli({"bogus"}) == 2);
  }

  TEST_CASE("sweep writes one block per value")
  {
    auto dir = scratchDir("sweep");
    REQUIRE(runCli({"sweep", test::testdataPath("pair.cfg"), "--param", "peba", "--values", "on,off", "--out",
                    dir.string()}) == 0);
    auto csv = lines(test::readFile((dir / "sweep.csv").string()));
    int on = 0, off = 0;
    for (auto& l : csv) {
      on += l.find(",peba,on,") != std::string::npos;
      off += l.find(",peba,off,") != std::string::npos;
    }
    CHECK(on == 4);
    CHECK(off == 4);
    CHECK(fs::exists(dir / "sweep.json"));
  }

  TEST_CASE("oracles")
  {
    std::string out;
    REQUIRE(runCli({"oracle", "metadata-size", "1000", "4", "20", "8"}, &out) == 0);
    CHECK(out == "32000\n");
    REQUIRE(runCli({"oracle", "eta", "5000", "1"}, &out) == 0);
    CHECK(std::stod(out) == doctest::Approx(0.99830).epsilon(1e-5));
    REQUIRE(runCli({"oracle", "tdelay", "16", "2", "0.001"}, &out) == 0);
    CHECK(std::stod(out) == doctest::Approx(0.00125));
    REQUIRE(runCli({"oracle", "fetch-time", "10", "0.5", "0.5", "4", "bitmaps-first"}, &out) == 0);
    CHECK(std::stod(out) == doctest::Approx(6));
    CHECK(runCli({"oracle", "fetch-time", "3", "0.5", "0.5", "4", "interleaved"}) == 2);
  }
}

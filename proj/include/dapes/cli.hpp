#pragma once

#include "dapes/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dapes::cli {

using sim::ConfigError;
using sim::RunReport;
using sim::ScenarioConfig;

/// Seeds and scenario read from one config file.
struct LoadedConfig
{
  ScenarioConfig scenario;
  std::vector<std::uint64_t> seeds{1};
};

/// INI text with sections; keys are `section.key`.  Unknown keys and bad
/// values raise ConfigError naming the key (and line when known).
LoadedConfig
parseConfig(const std::string& text);

LoadedConfig
loadConfig(const std::string& path);

/// Sets one `section.key` on a scenario.  Throws ConfigError.
void
applySetting(LoadedConfig& config, const std::string& key, const std::string& value);

/// "1..10", "1,3,5" or a mix.  Throws ConfigError on an empty or bad list.
std::vector<std::uint64_t>
parseSeedList(const std::string& text);

/// Keys accepted by `sweep --param`, mapped to config keys.
std::string
sweepKey(const std::string& param);

/// Runs all seeds, seed-parallel when jobs > 1; results in seed-list order.
std::vector<RunReport>
runSeeds(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds, int jobs,
         const std::string& traceDir = "");

// ---------------------------------------------------------------------------
// Output

inline constexpr int kCsvSchemaVersion = 1;

std::string
csvHeader();

/// Linear-interpolated percentile (p in [0, 100]) of unsorted values.
double
percentile(std::vector<double> values, double p);

/// Node rows, one seed row per report and a p90 aggregate row.
void
writeCsvRows(std::ostream& out, const std::vector<RunReport>& reports, const std::string& sweepParam = "",
             const std::string& sweepValue = "");

std::string
toJson(const std::vector<RunReport>& reports, const std::string& sweepParam = "",
       const std::vector<std::string>& sweepValues = {});

/// Entry point of `dapes-sim`.  Returns the process exit code.
int
main(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace dapes::cli

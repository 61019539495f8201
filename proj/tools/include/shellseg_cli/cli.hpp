#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace shellseg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumeric = 4,
};

// Runs one subcommand. `args` excludes the program name, e.g.
// {"train", "--config", "run.ini"}. Errors are reported on `err` and mapped
// to exit codes; nothing is thrown.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Names of the files each command writes into its output directory.
inline constexpr const char* kResolvedConfig = "resolved.ini";
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kHistoryFile = "history.tsv";
inline constexpr const char* kMetricsTable = "metrics.tsv";
inline constexpr const char* kMetricsJson = "metrics.json";
inline constexpr const char* kStatsTable = "stats.tsv";
inline constexpr const char* kChartImage = "chart.png";
inline constexpr const char* kPanoramaImage = "panorama.png";

}  // namespace shellseg::cli

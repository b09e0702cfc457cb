#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace etongue {

// Defaults shared by the CLI subcommands, optionally loaded from a JSON file
// with --config. Command-line flags win over the file.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  double variance_target = 0.95;
  int k_for_knn = 3;
  int n_trees = 50;
  std::string scheme = "random10";
  int n_threads = 1;
  std::string manifest;
  std::string bundle;
  std::string out;

  // Throws ConfigurationError unless 0 < variance_target <= 1, k >= 1,
  // n_trees >= 1 and n_threads >= 1.
  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& doc);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
// evaluate finished but at least one fold was skipped
inline constexpr int kExitSkippedFolds = 3;

// Entry point of the `etongue` tool; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace etongue

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "issp/serialization.hpp"

namespace issp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSoundness = 3;

inline constexpr int kSchemaVersion = 1;

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  bool quiet = false;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct ExperimentOutcome {
  bool sound = true;  // false: an analytic bound exceeded an empirical upper endpoint
  Json report;
  std::vector<OutputFile> files;  // report.json is always first
  std::string summary;
};

/// Parses config text. Syntax errors become kValidation errors whose message
/// starts with "<source>:<line>:<column>:".
Json parse_config(const std::string& text, const std::string& source = "config");

/// Runs the experiment named by config["experiment"]. Throws issp::Error on
/// invalid configs. Output is a pure function of (config, seed override).
ExperimentOutcome run_experiment(const Json& config, const RunOptions& options = {});

/// Reads, runs and writes outputs; returns the process exit status.
int run_config_file(const std::string& path, const RunOptions& options, std::ostream& out,
                    std::ostream& err);

}  // namespace issp

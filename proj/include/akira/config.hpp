#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "akira/fsm.hpp"

namespace akira {

/// Session parameters plus the knobs of the surrounding tools.
struct RunConfig {
  SessionConfig session;
  std::size_t variant_count = 3;
  std::size_t test_parallelism = 2;
  std::chrono::milliseconds detector_timeout{60'000};
  std::chrono::milliseconds runner_timeout{120'000};
  std::filesystem::path kb_path;        // empty: knowledge is not persisted
  std::filesystem::path channel_map;    // empty: built-in table
  std::filesystem::path keyword_rules;  // empty: built-in table
  std::filesystem::path prompt_dir;     // empty: built-in templates
};

/// Sets one key. Throws InvalidArgument for unknown keys or unparseable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// "key = value" lines; '#' starts a comment. Throws ParseError naming the line.
RunConfig parse_config(std::string_view text, RunConfig base = {});
/// As parse_config; relative paths are resolved against the file's directory.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace akira

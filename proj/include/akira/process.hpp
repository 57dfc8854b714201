#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace akira {

struct ProcessOptions {
  std::filesystem::path cwd;  // empty: inherit
  std::chrono::milliseconds timeout{60'000};
  std::vector<std::pair<std::string, std::string>> env;  // added to the inherited environment
};

struct ProcessResult {
  int exit_code = -1;  // valid when !timed_out && !signaled
  bool timed_out = false;
  bool signaled = false;
  bool spawn_failed = false;  // execvp failed (command not found, ...)
  std::string stdout_text;
  std::string stderr_text;

  bool ok() const noexcept { return !timed_out && !signaled && !spawn_failed && exit_code == 0; }
};

/// Runs argv[0] (PATH lookup) in its own process group, capturing both streams.
/// On timeout the whole group is killed.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

/// True when `argv` can be spawned and exits 0 within the timeout.
bool command_succeeds(const std::vector<std::string>& argv,
                      std::chrono::milliseconds timeout = std::chrono::seconds(20));

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view prefix = "akira");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  TempDir(TempDir&& other) noexcept;
  TempDir& operator=(TempDir&& other) noexcept;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Lays out a single-binary cargo project with `code` as src/main.rs.
void write_cargo_project(const std::filesystem::path& dir, std::string_view code,
                         std::string_view crate_name = "akira_candidate");

}  // namespace akira

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "akira/report.hpp"

namespace akira {

inline constexpr std::string_view kUnknownCategory = "unknown";

/// Ordered "pattern | pattern => category" rules over a diagnostic header line.
class KeywordRules {
 public:
  struct Rule {
    std::vector<std::string> patterns;  // lower-cased
    std::string category;
  };

  static KeywordRules parse(std::string_view text);
  static KeywordRules load(const std::filesystem::path& path);
  /// data/keyword_rules.txt
  static const KeywordRules& builtin();

  /// First rule with any pattern contained (case-insensitively) in `header`; "unknown" otherwise.
  std::string categorize(std::string_view header) const;
  const std::vector<Rule>& rules() const noexcept { return rules_; }

 private:
  std::vector<Rule> rules_;
};

/// One finding per "error: Undefined Behavior" block, in document order.
std::vector<UbFinding> parse_diagnostics(std::string_view raw,
                                         const KeywordRules& rules = KeywordRules::builtin());

/// Detector backends. detect() throws Error{DetectorUnavailable} when no trustworthy
/// report can be produced; it never reports a clean run in that case.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectionReport detect(const std::string& code) = 0;
};

/// Replays a script. Content rules are consulted first; otherwise the next report of
/// the sequence is returned. An exhausted script is an error, never a fabricated report.
///
/// Script JSON:
///   { "rules":    [ { "contains": "marker" | ["a", "b"], "report": REPORT }, ... ],
///     "sequence": [ REPORT, ... ] }
/// REPORT is an integer N (N findings of category "unknown"), or an object with any of
///   "categories": [label, ...], "findings": [{category, message, location}],
///   "stderr": raw detector text (parsed), "compiled": bool.
class ScriptedDetector final : public Detector {
 public:
  struct Rule {
    std::vector<std::string> contains;
    DetectionReport report;
  };

  ScriptedDetector() = default;
  ScriptedDetector(std::vector<Rule> rules, std::vector<DetectionReport> sequence);
  ScriptedDetector(ScriptedDetector&& other) noexcept
      : rules_(std::move(other.rules_)),
        sequence_(std::move(other.sequence_)),
        cursor_(other.cursor_),
        calls_(other.calls_) {}

  static ScriptedDetector from_json(const nlohmann::json& script,
                                    const KeywordRules& rules = KeywordRules::builtin());
  static ScriptedDetector load(const std::filesystem::path& path);
  /// Sequence of plain UB counts, e.g. {3, 1, 0}.
  static ScriptedDetector counts(std::vector<std::size_t> sequence);

  DetectionReport detect(const std::string& code) override;
  std::size_t calls() const;

 private:
  std::vector<Rule> rules_;
  std::vector<DetectionReport> sequence_;
  mutable std::mutex mu_;
  std::size_t cursor_ = 0;
  std::size_t calls_ = 0;
};

DetectionReport report_from_json(const nlohmann::json& j,
                                 const KeywordRules& rules = KeywordRules::builtin());
nlohmann::json finding_to_json(const UbFinding& f);
UbFinding finding_from_json(const nlohmann::json& j);

struct MiriOptions {
  std::vector<std::string> command{"cargo", "miri", "run", "--quiet"};
  std::chrono::milliseconds timeout{60'000};
};

/// Runs the Miri interpreter on a throwaway single-file cargo project.
class MiriDetector final : public Detector {
 public:
  explicit MiriDetector(MiriOptions options = {}, const KeywordRules& rules = KeywordRules::builtin());

  DetectionReport detect(const std::string& code) override;

  /// Probes `cargo miri --version`.
  static bool available();

  /// Classifies a finished run. Exposed for tests.
  static DetectionReport interpret(int exit_code, std::string raw_stderr, const KeywordRules& rules);

 private:
  MiriOptions options_;
  KeywordRules rules_;
};

}  // namespace akira

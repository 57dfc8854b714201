#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace akira {

struct SourceLocation {
  std::string file;
  int line = 0;
  int column = 0;

  bool operator==(const SourceLocation&) const = default;
};

/// One "Undefined Behavior" diagnostic block.
struct UbFinding {
  std::string category;  // label from the keyword-rule table, or "unknown"
  std::string message;   // text after "Undefined Behavior: " on the header line
  std::optional<SourceLocation> location;

  bool operator==(const UbFinding&) const = default;
};

/// Result of one full detection run. Invariant: ub_count == findings.size().
struct DetectionReport {
  std::size_t ub_count = 0;
  std::vector<UbFinding> findings;
  bool compiled = true;
  std::string raw_output;

  bool clean() const noexcept { return compiled && ub_count == 0; }

  static DetectionReport from_findings(std::vector<UbFinding> findings, bool compiled = true,
                                       std::string raw = {}) {
    DetectionReport r;
    r.ub_count = findings.size();
    r.findings = std::move(findings);
    r.compiled = compiled;
    r.raw_output = std::move(raw);
    return r;
  }
};

}  // namespace akira

#include "akira/detection.hpp"

#include <charconv>

#include "akira/embedded_data.hpp"
#include "akira/error.hpp"
#include "akira/process.hpp"
#include "akira/text.hpp"

namespace akira {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Keyword rules

KeywordRules KeywordRules::parse(std::string_view text) {
  KeywordRules out;
  int lineno = 0;
  for (auto line : split_lines(text)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto arrow = line.find("=>");
    const auto where = "keyword rules line " + std::to_string(lineno) + ": ";
    if (arrow == std::string_view::npos)
      throw Error(ErrorKind::ParseError, where + "expected 'pattern | ... => category'");
    Rule rule;
    rule.category = std::string(trim(line.substr(arrow + 2)));
    for (auto p : split(line.substr(0, arrow), '|')) {
      p = trim(p);
      if (!p.empty()) rule.patterns.push_back(to_lower(p));
    }
    if (rule.patterns.empty() || rule.category.empty())
      throw Error(ErrorKind::ParseError, where + "rule needs a pattern and a category");
    out.rules_.push_back(std::move(rule));
  }
  return out;
}

KeywordRules KeywordRules::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const KeywordRules& KeywordRules::builtin() {
  static const KeywordRules rules = parse(embedded::files().at("keyword_rules.txt"));
  return rules;
}

std::string KeywordRules::categorize(std::string_view header) const {
  const std::string lowered = to_lower(header);
  for (const auto& rule : rules_)
    for (const auto& p : rule.patterns)
      if (lowered.find(p) != std::string::npos) return rule.category;
  return std::string(kUnknownCategory);
}

// ---------------------------------------------------------------------------
// Diagnostics parser

namespace {

constexpr std::string_view kUbHeader = "error: Undefined Behavior";

bool ends_block(std::string_view line) {
  return line.starts_with("error") || line.starts_with("warning") || line.starts_with("note:");
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// "  --> src/main.rs:5:18"
std::optional<SourceLocation> parse_location(std::string_view line) {
  line = trim(line);
  if (!line.starts_with("-->")) return std::nullopt;
  line = trim(line.substr(3));
  const auto c2 = line.rfind(':');
  if (c2 == std::string_view::npos || c2 == 0) return std::nullopt;
  const auto c1 = line.rfind(':', c2 - 1);
  if (c1 == std::string_view::npos) return std::nullopt;
  auto lineno = to_int(line.substr(c1 + 1, c2 - c1 - 1));
  auto col = to_int(line.substr(c2 + 1));
  if (!lineno || !col) return std::nullopt;
  return SourceLocation{std::string(line.substr(0, c1)), *lineno, *col};
}

std::string header_message(std::string_view header) {
  auto rest = header.substr(kUbHeader.size());
  if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
  return std::string(trim(rest));
}

}  // namespace

std::vector<UbFinding> parse_diagnostics(std::string_view raw, const KeywordRules& rules) {
  std::vector<UbFinding> findings;
  bool in_block = false;
  for (auto line : split_lines(raw)) {
    if (line.starts_with(kUbHeader)) {
      UbFinding f;
      f.message = header_message(line);
      f.category = rules.categorize(f.message);
      findings.push_back(std::move(f));
      in_block = true;
      continue;
    }
    if (!in_block) continue;
    if (ends_block(line)) {
      in_block = false;
      continue;
    }
    if (!findings.back().location)
      if (auto loc = parse_location(line)) findings.back().location = std::move(loc);
  }
  return findings;
}

// ---------------------------------------------------------------------------
// JSON helpers

json finding_to_json(const UbFinding& f) {
  json j{{"category", f.category}, {"message", f.message}};
  if (f.location)
    j["location"] = {{"file", f.location->file}, {"line", f.location->line}, {"column", f.location->column}};
  else
    j["location"] = nullptr;
  return j;
}

UbFinding finding_from_json(const json& j) {
  UbFinding f;
  f.category = j.value("category", std::string(kUnknownCategory));
  f.message = j.value("message", std::string{});
  if (auto it = j.find("location"); it != j.end() && it->is_object())
    f.location = SourceLocation{it->at("file").get<std::string>(), it->at("line").get<int>(),
                                it->at("column").get<int>()};
  return f;
}

DetectionReport report_from_json(const json& j, const KeywordRules& rules) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto n = j.get<long long>();
    if (n < 0) throw Error(ErrorKind::ParseError, "negative UB count in detector script");
    std::vector<UbFinding> findings(static_cast<std::size_t>(n),
                                    UbFinding{std::string(kUnknownCategory), "scripted finding", {}});
    return DetectionReport::from_findings(std::move(findings));
  }
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "detector script report must be a number or object");
  std::vector<UbFinding> findings;
  std::string raw;
  if (auto it = j.find("stderr"); it != j.end()) {
    raw = it->get<std::string>();
    findings = parse_diagnostics(raw, rules);
  }
  if (auto it = j.find("categories"); it != j.end())
    for (const auto& c : *it) findings.push_back({c.get<std::string>(), c.get<std::string>(), {}});
  if (auto it = j.find("findings"); it != j.end())
    for (const auto& f : *it) findings.push_back(finding_from_json(f));
  return DetectionReport::from_findings(std::move(findings), j.value("compiled", true), std::move(raw));
}

// ---------------------------------------------------------------------------
// Scripted detector

ScriptedDetector::ScriptedDetector(std::vector<Rule> rules, std::vector<DetectionReport> sequence)
    : rules_(std::move(rules)), sequence_(std::move(sequence)) {}

ScriptedDetector ScriptedDetector::from_json(const json& script, const KeywordRules& kw) {
  std::vector<Rule> rules;
  std::vector<DetectionReport> sequence;
  try {
    if (auto it = script.find("rules"); it != script.end()) {
      for (const auto& r : *it) {
        Rule rule;
        const auto& c = r.at("contains");
        if (c.is_string())
          rule.contains.push_back(c.get<std::string>());
        else
          rule.contains = c.get<std::vector<std::string>>();
        rule.report = report_from_json(r.at("report"), kw);
        rules.push_back(std::move(rule));
      }
    }
    if (auto it = script.find("sequence"); it != script.end())
      for (const auto& r : *it) sequence.push_back(report_from_json(r, kw));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("detector script: ") + e.what());
  }
  return ScriptedDetector(std::move(rules), std::move(sequence));
}

ScriptedDetector ScriptedDetector::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

ScriptedDetector ScriptedDetector::counts(std::vector<std::size_t> sequence) {
  std::vector<DetectionReport> reports;
  for (auto n : sequence) reports.push_back(report_from_json(json(n)));
  return ScriptedDetector({}, std::move(reports));
}

DetectionReport ScriptedDetector::detect(const std::string& code) {
  std::lock_guard lock(mu_);
  ++calls_;
  for (const auto& rule : rules_) {
    const bool all = std::ranges::all_of(rule.contains, [&](const std::string& needle) {
      return code.find(needle) != std::string::npos;
    });
    if (all) return rule.report;
  }
  if (cursor_ < sequence_.size()) return sequence_[cursor_++];
  throw Error(ErrorKind::DetectorUnavailable, "detector unavailable: script exhausted");
}

std::size_t ScriptedDetector::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Miri

MiriDetector::MiriDetector(MiriOptions options, const KeywordRules& rules)
    : options_(std::move(options)), rules_(rules) {}

bool MiriDetector::available() { return command_succeeds({"cargo", "miri", "--version"}); }

DetectionReport MiriDetector::interpret(int exit_code, std::string raw, const KeywordRules& rules) {
  auto findings = parse_diagnostics(raw, rules);
  if (!findings.empty()) return DetectionReport::from_findings(std::move(findings), true, std::move(raw));
  if (exit_code == 0) return DetectionReport::from_findings({}, true, std::move(raw));
  if (raw.find("error[E") != std::string::npos || raw.find("could not compile") != std::string::npos)
    return DetectionReport::from_findings({}, false, std::move(raw));
  // A plain panic is a semantic failure, not undefined behavior.
  if (raw.find("panicked at") != std::string::npos)
    return DetectionReport::from_findings({}, true, std::move(raw));
  const auto excerpt = raw.substr(0, std::min<std::size_t>(raw.size(), 400));
  throw Error(ErrorKind::DetectorUnavailable,
              "detector unavailable: miri exited " + std::to_string(exit_code) + ": " + excerpt);
}

DetectionReport MiriDetector::detect(const std::string& code) {
  TempDir dir("akira-miri");
  write_cargo_project(dir.path(), code);
  ProcessOptions opts;
  opts.cwd = dir.path();
  opts.timeout = options_.timeout;
  const auto result = run_process(options_.command, opts);
  if (result.spawn_failed)
    throw Error(ErrorKind::DetectorUnavailable, "detector unavailable: " + result.stderr_text);
  if (result.timed_out) throw Error(ErrorKind::DetectorUnavailable, "detector unavailable: timeout");
  if (result.signaled) throw Error(ErrorKind::DetectorUnavailable, "detector unavailable: killed by signal");
  return interpret(result.exit_code, result.stderr_text, rules_);
}

}  // namespace akira

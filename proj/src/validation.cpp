#include "akira/validation.hpp"

#include <algorithm>
#include <future>
#include <numeric>

#include "akira/error.hpp"
#include "akira/process.hpp"
#include "akira/text.hpp"

namespace akira {

using nlohmann::json;

std::string_view to_string(PointKind k) noexcept {
  switch (k) {
    case PointKind::AllocPairing: return "AllocPairing";
    case PointKind::Alignment: return "Alignment";
    case PointKind::BoundsCheck: return "BoundsCheck";
    case PointKind::Lifetime: return "Lifetime";
    case PointKind::Other: return "Other";
  }
  return "Other";
}

PointKind parse_point_kind(std::string_view text) noexcept {
  const auto t = to_lower(trim(text));
  for (PointKind k : {PointKind::AllocPairing, PointKind::Alignment, PointKind::BoundsCheck, PointKind::Lifetime})
    if (to_lower(to_string(k)) == t) return k;
  return PointKind::Other;
}

bool accepted_by_matrix(const PassMatrix& matrix) {
  return std::ranges::any_of(matrix, [](const std::vector<bool>& row) {
    return std::ranges::all_of(row, [](bool b) { return b; });
  });
}

json to_json(const ExecVerdict& v) {
  return json{{"accepted", v.accepted},
              {"variants_tried", v.variants_tried},
              {"tests_generated", v.tests_generated},
              {"matrix", v.matrix}};
}

// ---------------------------------------------------------------------------
// Scripted runner

namespace {

ScriptedRunner::Row row_from_json(const json& j) {
  ScriptedRunner::Row row;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s != "pass" && s != "fail") throw Error(ErrorKind::ParseError, "runner result must be pass or fail");
    row.all = s == "pass";
  } else if (j.is_boolean()) {
    row.all = j.get<bool>();
  } else {
    row.per_test = j.get<std::vector<bool>>();
  }
  return row;
}

std::vector<bool> expand(const ScriptedRunner::Row& row, std::size_t n) {
  if (row.all) return std::vector<bool>(n, *row.all);
  std::vector<bool> out = row.per_test;
  out.resize(n, false);
  return out;
}

}  // namespace

ScriptedRunner::ScriptedRunner(ScriptedRunner&& other) noexcept
    : rules_(std::move(other.rules_)),
      sequence_(std::move(other.sequence_)),
      default_(other.default_),
      cursor_(other.cursor_),
      calls_(other.calls_) {}

ScriptedRunner ScriptedRunner::from_json(const json& script) {
  ScriptedRunner r;
  try {
    if (auto it = script.find("rules"); it != script.end()) {
      for (const auto& jr : *it) {
        Rule rule;
        const auto& c = jr.at("contains");
        if (c.is_string())
          rule.contains.push_back(c.get<std::string>());
        else
          rule.contains = c.get<std::vector<std::string>>();
        rule.row = row_from_json(jr.at("result"));
        r.rules_.push_back(std::move(rule));
      }
    }
    if (auto it = script.find("sequence"); it != script.end())
      for (const auto& jr : *it) r.sequence_.push_back(row_from_json(jr));
    if (auto it = script.find("default"); it != script.end()) r.default_ = row_from_json(*it).all;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("runner script: ") + e.what());
  }
  return r;
}

ScriptedRunner ScriptedRunner::always(bool pass) {
  ScriptedRunner r;
  r.default_ = pass;
  return r;
}

ScriptedRunner ScriptedRunner::sequence(std::vector<std::vector<bool>> rows) {
  ScriptedRunner r;
  for (auto& row : rows) r.sequence_.push_back(Row{std::nullopt, std::move(row)});
  return r;
}

std::vector<bool> ScriptedRunner::run(const std::string& program, std::span<const std::string> test_names) {
  std::lock_guard lock(mu_);
  ++calls_;
  for (const auto& rule : rules_) {
    if (std::ranges::all_of(rule.contains, [&](const std::string& s) { return program.find(s) != std::string::npos; }))
      return expand(rule.row, test_names.size());
  }
  if (cursor_ < sequence_.size()) return expand(sequence_[cursor_++], test_names.size());
  if (default_) return std::vector<bool>(test_names.size(), *default_);
  throw Error(ErrorKind::RunnerFailure, "runner unavailable: script exhausted");
}

std::size_t ScriptedRunner::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------------------
// cargo test

CargoTestRunner::CargoTestRunner(CargoRunnerOptions options) : options_(std::move(options)) {}

bool CargoTestRunner::available() { return command_succeeds({"cargo", "--version"}); }

std::vector<bool> CargoTestRunner::parse_output(std::string_view output, std::span<const std::string> test_names) {
  std::vector<bool> results(test_names.size(), false);
  bool summary = false;
  for (auto line : split_lines(output)) {
    if (line.starts_with("test result:")) summary = true;
    if (!line.starts_with("test ")) continue;
    const auto dots = line.find(" ... ");
    if (dots == std::string_view::npos) continue;
    const auto path = line.substr(5, dots - 5);
    const auto status = trim(line.substr(dots + 5));
    for (std::size_t i = 0; i < test_names.size(); ++i) {
      const auto& name = test_names[i];
      if (path == name || (path.size() > name.size() && path.ends_with(name) &&
                           path.substr(0, path.size() - name.size()).ends_with("::")))
        results[i] = status == "ok";
    }
  }
  if (!summary) throw Error(ErrorKind::RunnerFailure, "no test summary in runner output");
  return results;
}

std::vector<bool> CargoTestRunner::run(const std::string& program, std::span<const std::string> test_names) {
  TempDir dir("akira-test");
  write_cargo_project(dir.path(), program);
  ProcessOptions opts;
  opts.cwd = dir.path();
  opts.timeout = options_.timeout;
  opts.env = {{"CARGO_TARGET_DIR", (dir.path() / "target").string()}, {"RUST_BACKTRACE", "0"}};
  const auto result = run_process(options_.command, opts);
  if (result.spawn_failed) throw Error(ErrorKind::RunnerFailure, result.stderr_text);
  if (result.timed_out) throw Error(ErrorKind::RunnerFailure, "test run timed out");
  return parse_output(result.stdout_text, test_names);
}

// ---------------------------------------------------------------------------
// TestGenAgent steps

namespace {

std::string static_hints(const std::string& code) {
  std::vector<std::string> hints;
  if (code.find("alloc(") != std::string::npos && code.find("dealloc(") != std::string::npos)
    hints.emplace_back("allocation/deallocation pair present (check matching Layout)");
  if (code.find("align") != std::string::npos || code.find("read_unaligned") != std::string::npos)
    hints.emplace_back("alignment-sensitive memory operation present");
  if (code.find("get_unchecked") != std::string::npos || code.find(".offset(") != std::string::npos ||
      code.find(".add(") != std::string::npos)
    hints.emplace_back("unchecked pointer arithmetic or indexing present");
  if (code.find("transmute") != std::string::npos || code.find("from_raw") != std::string::npos)
    hints.emplace_back("lifetime-erasing conversion present");
  if (code.find("thread::spawn") != std::string::npos)
    hints.emplace_back("threads share data");
  std::string out;
  for (const auto& h : hints) out += "- " + h + "\n";
  return out.empty() ? "none\n" : out;
}

std::optional<std::string> ask(GenerationProvider* provider, const std::string& prompt, const std::string& purpose,
                               const TestGenOptions& options, std::uint64_t salt) {
  if (provider == nullptr) return std::nullopt;
  try {
    GenerationRequest req;
    req.prompt = prompt;
    req.temperature = options.temperature;
    req.step_budget = 1;
    req.seed = options.seed + salt;
    req.purpose = purpose;
    auto reply = provider->complete(req);
    if (trim(reply.text).empty()) return std::nullopt;
    return std::move(reply.text);
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool has_main(const std::string& code) { return code.find("fn main(") != std::string::npos; }

std::string indent(std::string_view body, std::string_view pad) {
  std::string out;
  for (auto line : split_lines(body)) {
    if (!line.empty()) out += pad;
    out += line;
    out += '\n';
  }
  return out;
}

std::string one_line(std::string_view s) {
  std::string out(trim(s));
  std::ranges::replace(out, '\n', ' ');
  return out;
}

std::vector<std::string> fenced_blocks(std::string_view reply) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  while ((pos = reply.find("```", pos)) != std::string_view::npos) {
    const auto line_end = reply.find('\n', pos);
    if (line_end == std::string_view::npos) break;
    const auto close = reply.find("```", line_end + 1);
    if (close == std::string_view::npos) break;
    if (auto code = extract_code(reply.substr(pos, close + 3 - pos))) blocks.push_back(std::move(*code));
    pos = close + 3;
  }
  return blocks;
}

}  // namespace

std::vector<ModificationPoint> summarize(const std::string& code, GenerationProvider* provider,
                                         const TestGenOptions& options, const PromptLibrary& prompts) {
  const auto prompt = render(prompts.get("summarize"), {{"code", code}, {"hints", static_hints(code)}});
  std::vector<ModificationPoint> points;
  if (auto reply = ask(provider, prompt, "testgen:summarize", options, 1)) {
    for (auto line : split_lines(*reply)) {
      const auto parts = split(line, '|');
      if (parts.size() < 3) continue;
      ModificationPoint p;
      p.kind = parse_point_kind(parts[0]);
      p.location_hint = std::string(trim(parts[1]));
      std::string desc;
      for (std::size_t i = 2; i < parts.size(); ++i) {
        if (i > 2) desc += "|";
        desc += parts[i];
      }
      p.description = std::string(trim(desc));
      points.push_back(std::move(p));
    }
  }
  if (points.empty()) points.push_back({"whole program", "", PointKind::Other});
  return points;
}

std::string fallback_constraint(PointKind kind) {
  switch (kind) {
    case PointKind::AllocPairing:
      return "every deallocation uses the same layout (size and alignment) as the allocation it releases";
    case PointKind::Alignment:
      return "every typed memory access goes through a pointer aligned for its type";
    case PointKind::BoundsCheck:
      return "every indexed or offset access stays within the bounds of its allocation";
    case PointKind::Lifetime:
      return "no reference or pointer is used after the value it points to is dropped or moved";
    case PointKind::Other:
      break;
  }
  return "program output unchanged on the original entry path";
}

std::vector<SemanticConstraint> derive_constraints(std::span<const ModificationPoint> points, const std::string& code,
                                                   GenerationProvider* provider, const TestGenOptions& options,
                                                   const PromptLibrary& prompts) {
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "derive_constraints needs at least one point");
  std::string listing;
  for (std::size_t i = 0; i < points.size(); ++i)
    listing += std::to_string(i + 1) + ". [" + std::string(to_string(points[i].kind)) + "] " + points[i].description +
               (points[i].location_hint.empty() ? "" : " (" + points[i].location_hint + ")") + "\n";
  const auto prompt = render(prompts.get("constraints"), {{"code", code}, {"points", listing}});

  std::vector<SemanticConstraint> constraints;
  if (auto reply = ask(provider, prompt, "testgen:constraints", options, 2)) {
    for (auto line : split_lines(*reply)) {
      const auto bar = line.find('|');
      if (bar == std::string_view::npos) continue;
      const auto idx_text = trim(line.substr(0, bar));
      std::size_t idx = 0;
      try {
        idx = std::stoul(std::string(idx_text));
      } catch (const std::exception&) {
        continue;
      }
      const auto statement = trim(line.substr(bar + 1));
      if (idx < 1 || idx > points.size() || statement.empty()) continue;
      constraints.push_back({std::string(statement), idx - 1});
    }
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool covered = std::ranges::any_of(constraints, [&](const SemanticConstraint& c) { return c.derived_from == i; });
    if (!covered) constraints.push_back({fallback_constraint(points[i].kind), i});
  }
  std::ranges::stable_sort(constraints, {}, &SemanticConstraint::derived_from);
  return constraints;
}

TestSuite smoke_suite(const std::string& code) {
  TestSuite suite;
  suite.smoke_only = true;
  const std::string name = std::string(kTestPrefix) + "smoke";
  suite.test_names = {name};
  suite.covers = {{}};
  suite.module_text = "\n#[cfg(test)]\nmod " + std::string(kTestModuleName) +
                      " {\n    #[allow(unused_imports)]\n    use super::*;\n\n    #[test]\n    fn " + name + "() {\n" +
                      (has_main(code) ? "        super::main();\n" : "") + "    }\n}\n";
  return suite;
}

Synthesis synthesize(std::span<const SemanticConstraint> constraints, const std::string& code,
                     GenerationProvider* provider, const TestGenOptions& options, const PromptLibrary& prompts) {
  if (options.variant_count < 1) throw Error(ErrorKind::InvalidArgument, "variant count must be >= 1");
  Synthesis out;
  out.variants.push_back(code);

  std::string constraint_list;
  for (std::size_t i = 0; i < constraints.size(); ++i)
    constraint_list += std::to_string(i + 1) + ". " + constraints[i].statement + "\n";

  if (options.variant_count > 1) {
    const auto prompt = render(prompts.get("variants"), {{"code", code},
                                                         {"constraints", constraint_list},
                                                         {"k", std::to_string(options.variant_count - 1)}});
    if (auto reply = ask(provider, prompt, "testgen:variants", options, 3)) {
      for (auto& v : fenced_blocks(*reply)) {
        if (out.variants.size() >= options.variant_count) break;
        if (std::ranges::find(out.variants, v) == out.variants.end()) out.variants.push_back(std::move(v));
      }
    }
  }

  std::string tests;
  TestSuite suite;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto prompt = render(prompts.get("test"), {{"code", code}, {"constraint", constraints[i].statement}});
    auto reply = ask(provider, prompt, "testgen:test", options, 10 + i);
    std::optional<std::string> body = reply ? extract_code(*reply) : std::nullopt;
    if (!body) continue;
    const std::string name = std::string(kTestPrefix) + "c" + std::to_string(i);
    tests += "\n    #[test]\n    fn " + name + "() {\n        // " + one_line(constraints[i].statement) + "\n" +
             indent(*body, "        ") + "    }\n";
    suite.test_names.push_back(name);
    suite.covers.push_back({i});
  }
  if (suite.test_names.empty()) {
    out.tests = smoke_suite(code);
    return out;
  }
  suite.module_text = "\n#[cfg(test)]\nmod " + std::string(kTestModuleName) +
                      " {\n    #[allow(unused_imports)]\n    use super::*;\n" + tests + "}\n";
  out.tests = std::move(suite);
  return out;
}

ExecVerdict validate(std::span<const std::string> variants, const TestSuite& tests, TestRunner& runner,
                     std::size_t parallelism) {
  ExecVerdict verdict;
  verdict.variants_tried = variants.size();
  verdict.tests_generated = tests.test_names.size();
  verdict.matrix.assign(variants.size(), std::vector<bool>(tests.test_names.size(), false));

  auto run_row = [&](std::size_t i) {
    try {
      auto row = runner.run(variants[i] + tests.module_text, tests.test_names);
      row.resize(tests.test_names.size(), false);
      return row;
    } catch (const Error&) {
      return std::vector<bool>(tests.test_names.size(), false);
    }
  };

  const std::size_t width = runner.parallel_safe() ? std::max<std::size_t>(1, parallelism) : 1;
  for (std::size_t start = 0; start < variants.size(); start += width) {
    const std::size_t end = std::min(variants.size(), start + width);
    if (width == 1) {
      verdict.matrix[start] = run_row(start);
      continue;
    }
    std::vector<std::future<std::vector<bool>>> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, run_row, i));
    for (std::size_t i = start; i < end; ++i) verdict.matrix[i] = batch[i - start].get();
  }
  verdict.accepted = accepted_by_matrix(verdict.matrix);
  return verdict;
}

// ---------------------------------------------------------------------------
// TestGenAgent

TestGenAgent::TestGenAgent(GenerationProvider* provider, TestRunner& runner, TestGenOptions options,
                           const PromptLibrary& prompts)
    : provider_(provider), runner_(runner), options_(options), prompts_(prompts) {}

Evaluation TestGenAgent::evaluate(const std::string& candidate) {
  TestGenOptions opts = options_;
  opts.seed = options_.seed + 1000 * calls_++;
  Evaluation ev;
  ev.points = summarize(candidate, provider_, opts, prompts_);
  ev.constraints = derive_constraints(ev.points, candidate, provider_, opts, prompts_);
  auto synth = synthesize(ev.constraints, candidate, provider_, opts, prompts_);
  ev.variants = std::move(synth.variants);
  ev.tests = std::move(synth.tests);
  ev.verdict = validate(ev.variants, ev.tests, runner_, opts.parallelism);
  return ev;
}

std::vector<std::size_t> passing_variants_by_distance(const Evaluation& evaluation) {
  std::vector<std::pair<std::size_t, std::size_t>> ranked;  // distance, index
  const auto& m = evaluation.verdict.matrix;
  for (std::size_t i = 0; i < m.size() && i < evaluation.variants.size(); ++i) {
    if (!std::ranges::all_of(m[i], [](bool b) { return b; })) continue;
    ranked.emplace_back(i == 0 ? 0 : line_edit_distance(evaluation.variants[0], evaluation.variants[i]), i);
  }
  std::ranges::sort(ranked);
  std::vector<std::size_t> out;
  for (auto [d, i] : ranked) out.push_back(i);
  return out;
}

ConfusionRates confusion_matrix(std::span<const LabeledCandidate> candidates, SemanticValidator& validator) {
  ConfusionRates rates;
  if (candidates.empty()) return rates;
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
  for (const auto& c : candidates) {
    const bool predicted_abnormal = !validator.evaluate(c.code).verdict.accepted;
    if (c.abnormal)
      ++(predicted_abnormal ? tp : fn);
    else
      ++(predicted_abnormal ? fp : tn);
  }
  const double n = static_cast<double>(candidates.size());
  rates.true_positive = tp / n;
  rates.false_negative = fn / n;
  rates.false_positive = fp / n;
  rates.true_negative = tn / n;
  return rates;
}

}  // namespace akira

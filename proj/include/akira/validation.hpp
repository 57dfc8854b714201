#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "akira/agents.hpp"
#include "akira/provider.hpp"

namespace akira {

enum class PointKind { AllocPairing, Alignment, BoundsCheck, Lifetime, Other };

std::string_view to_string(PointKind k) noexcept;
/// Unknown names map to Other.
PointKind parse_point_kind(std::string_view text) noexcept;

struct ModificationPoint {
  std::string description;
  std::string location_hint;
  PointKind kind = PointKind::Other;

  bool operator==(const ModificationPoint&) const = default;
};

struct SemanticConstraint {
  std::string statement;
  std::size_t derived_from = 0;  // index into the point list

  bool operator==(const SemanticConstraint&) const = default;
};

inline constexpr std::string_view kTestModuleName = "akira_generated_tests";
inline constexpr std::string_view kTestPrefix = "akira_generated_";

struct TestSuite {
  std::string module_text;                       // appended verbatim to each variant
  std::vector<std::string> test_names;           // function names inside the module
  std::vector<std::vector<std::size_t>> covers;  // constraint indices per test (empty for smoke)
  bool smoke_only = false;
};

struct Synthesis {
  std::vector<std::string> variants;  // variants[0] is always the candidate
  TestSuite tests;
};

/// rows = variants, columns = tests
using PassMatrix = std::vector<std::vector<bool>>;

/// True iff some row passes every test.
bool accepted_by_matrix(const PassMatrix& matrix);

struct ExecVerdict {
  bool accepted = false;
  std::size_t variants_tried = 0;
  std::size_t tests_generated = 0;
  PassMatrix matrix;
};

nlohmann::json to_json(const ExecVerdict& v);

/// Executes one program (variant + appended test module) and reports pass/fail per
/// named test. Throws Error{RunnerFailure} when nothing trustworthy can be reported.
class TestRunner {
 public:
  virtual ~TestRunner() = default;
  virtual std::vector<bool> run(const std::string& program, std::span<const std::string> test_names) = 0;
  /// Whether run() may be called from several threads with order-independent results.
  virtual bool parallel_safe() const { return true; }
};

/// Script JSON:
///   { "rules":    [ { "contains": "s" | [..], "result": "pass" | "fail" | [bool, ...] } ],
///     "sequence": [ "pass" | "fail" | [bool, ...], ... ],
///     "default":  "pass" | "fail" }
/// A list result is padded with false (or truncated) to the number of tests requested.
class ScriptedRunner final : public TestRunner {
 public:
  struct Row {
    std::optional<bool> all;    // uniform result
    std::vector<bool> per_test;  // used when !all
  };
  struct Rule {
    std::vector<std::string> contains;
    Row row;
  };

  ScriptedRunner() = default;
  ScriptedRunner(ScriptedRunner&& other) noexcept;
  static ScriptedRunner from_json(const nlohmann::json& script);
  static ScriptedRunner always(bool pass);
  static ScriptedRunner sequence(std::vector<std::vector<bool>> rows);

  std::vector<bool> run(const std::string& program, std::span<const std::string> test_names) override;
  bool parallel_safe() const override { return sequence_.empty(); }
  std::size_t calls() const;

 private:
  std::vector<Rule> rules_;
  std::vector<Row> sequence_;
  std::optional<bool> default_;
  mutable std::mutex mu_;
  std::size_t cursor_ = 0;
  std::size_t calls_ = 0;
};

struct CargoRunnerOptions {
  std::vector<std::string> command{"cargo", "test", "--offline", "--color", "never"};
  std::chrono::milliseconds timeout{120'000};
};

/// `cargo test` on a throwaway project per variant.
class CargoTestRunner final : public TestRunner {
 public:
  explicit CargoTestRunner(CargoRunnerOptions options = {});
  std::vector<bool> run(const std::string& program, std::span<const std::string> test_names) override;

  static bool available();
  /// Per-test results from libtest output; throws RunnerFailure without a summary line.
  static std::vector<bool> parse_output(std::string_view output, std::span<const std::string> test_names);

 private:
  CargoRunnerOptions options_;
};

struct TestGenOptions {
  std::size_t variant_count = 3;  // k
  std::size_t parallelism = 2;
  double temperature = kDefaultTemperature;
  std::uint64_t seed = 0;
};

/// Intent-guided steps. Each degrades instead of throwing when the provider fails.
std::vector<ModificationPoint> summarize(const std::string& code, GenerationProvider* provider,
                                         const TestGenOptions& options = {},
                                         const PromptLibrary& prompts = PromptLibrary::builtin());
std::vector<SemanticConstraint> derive_constraints(std::span<const ModificationPoint> points, const std::string& code,
                                                   GenerationProvider* provider, const TestGenOptions& options = {},
                                                   const PromptLibrary& prompts = PromptLibrary::builtin());
Synthesis synthesize(std::span<const SemanticConstraint> constraints, const std::string& code,
                     GenerationProvider* provider, const TestGenOptions& options = {},
                     const PromptLibrary& prompts = PromptLibrary::builtin());
/// Runs the suite against every variant (concurrently when the runner allows).
/// A runner failure on a variant yields an all-fail row.
ExecVerdict validate(std::span<const std::string> variants, const TestSuite& tests, TestRunner& runner,
                     std::size_t parallelism = 1);

/// Constraint text used when the provider cannot supply one for a point.
std::string fallback_constraint(PointKind kind);
/// Smoke test body: runs main() when the program has one, otherwise only compiles.
TestSuite smoke_suite(const std::string& code);

struct Evaluation {
  ExecVerdict verdict;
  std::vector<std::string> variants;
  std::vector<ModificationPoint> points;
  std::vector<SemanticConstraint> constraints;
  TestSuite tests;
};

/// Semantic check used by the FSM at stable candidates and evaluation points.
class SemanticValidator {
 public:
  virtual ~SemanticValidator() = default;
  virtual Evaluation evaluate(const std::string& candidate) = 0;
};

/// summarize -> derive_constraints -> synthesize -> validate.
class TestGenAgent final : public SemanticValidator {
 public:
  TestGenAgent(GenerationProvider* provider, TestRunner& runner, TestGenOptions options = {},
               const PromptLibrary& prompts = PromptLibrary::builtin());

  Evaluation evaluate(const std::string& candidate) override;
  void set_temperature(double t) { options_.temperature = t; }

 private:
  GenerationProvider* provider_;
  TestRunner& runner_;
  TestGenOptions options_;
  const PromptLibrary& prompts_;
  std::uint64_t calls_ = 0;
};

/// All-pass rows ordered by line edit distance to variants[0], ties by index.
std::vector<std::size_t> passing_variants_by_distance(const Evaluation& evaluation);

struct LabeledCandidate {
  std::string code;
  bool abnormal = false;  // ground truth
};

/// Fractions of the labeled set; "positive" means predicted abnormal (verdict rejected).
struct ConfusionRates {
  double true_positive = 0.0;
  double false_negative = 0.0;
  double false_positive = 0.0;
  double true_negative = 0.0;
  double accuracy() const noexcept { return true_positive + true_negative; }
};

ConfusionRates confusion_matrix(std::span<const LabeledCandidate> candidates, SemanticValidator& validator);

}  // namespace akira

#include <random>

#include <gtest/gtest.h>

#include "akira/error.hpp"
#include "akira/validation.hpp"
#include "support.hpp"

namespace akira {
namespace {

using nlohmann::json;
using testing::fenced;
using testing::FixedValidator;

const std::string kAllocProgram =
    "use std::alloc::{alloc, dealloc, Layout};\n"
    "fn main() {\n"
    "    unsafe {\n"
    "        let p = alloc(Layout::from_size_align(16, 8).unwrap());\n"
    "        dealloc(p, Layout::from_size_align(8, 8).unwrap());\n"
    "    }\n"
    "}\n";

ScriptedProvider rule_provider(std::vector<std::pair<std::vector<std::string>, std::string>> rules) {
  ScriptedProvider p;
  for (auto& [contains, response] : rules) p.add_rule({contains, std::nullopt, std::nullopt, response});
  return p;
}

TEST(Summarize, AllocPairingFromHints) {
  auto p = rule_provider({{{"task: summarize", "allocation/deallocation pair present"},
                           "AllocPairing | line 5 | dealloc layout differs from alloc layout"}});
  const auto points = summarize(kAllocProgram, &p);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_EQ(points[0].kind, PointKind::AllocPairing);
  EXPECT_EQ(points[0].location_hint, "line 5");
}

TEST(Summarize, ScriptedPointListVerbatim) {
  auto p = rule_provider({{{"task: summarize"},
                           "Alignment | a.rs:3 | read through u32 pointer\n"
                           "noise line\n"
                           "Lifetime | | borrowed | after drop\n"
                           "Weird | x | unknown kinds become Other\n"}});
  const auto points = summarize("fn main() {}\n", &p);
  const std::vector<ModificationPoint> expected = {
      {"read through u32 pointer", "a.rs:3", PointKind::Alignment},
      {"borrowed | after drop", "", PointKind::Lifetime},
      {"unknown kinds become Other", "x", PointKind::Other}};
  EXPECT_EQ(points, expected);
}

TEST(Summarize, ProviderDownDegradesToOther) {
  ScriptedProvider down;
  const auto points = summarize("fn main() {}\n", &down);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_EQ(points[0].kind, PointKind::Other);
  EXPECT_TRUE(points[0].location_hint.empty());
  EXPECT_EQ(summarize("fn main() {}\n", nullptr), points);
}

TEST(Constraints, AllocPairingFallbackMentionsLayout) {
  const std::vector<ModificationPoint> points = {{"pair", "", PointKind::AllocPairing}};
  const auto c = derive_constraints(points, kAllocProgram, nullptr);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NE(c[0].statement.find("layout"), std::string::npos);
  EXPECT_NE(c[0].statement.find("alloc"), std::string::npos);
}

TEST(Constraints, OnePerPointWithDistinctLinks) {
  const std::vector<ModificationPoint> points = {
      {"a", "", PointKind::Alignment}, {"b", "", PointKind::BoundsCheck}, {"c", "", PointKind::Other}};
  ScriptedProvider down;
  const auto c = derive_constraints(points, "fn main() {}\n", &down);
  ASSERT_EQ(c.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(c[i].derived_from, i);
  EXPECT_EQ(c[2].statement, "program output unchanged on the original entry path");
}

TEST(Constraints, ScriptedVerbatimAndGapsFilled) {
  const std::vector<ModificationPoint> points = {{"a", "", PointKind::Lifetime}, {"b", "", PointKind::Other}};
  auto p = rule_provider({{{"task: constraints"}, "1 | value outlives every borrow\n9 | out of range\nbad\n"}});
  const auto c = derive_constraints(points, "fn main() {}\n", &p);
  const std::vector<SemanticConstraint> expected = {
      {"value outlives every borrow", 0}, {"program output unchanged on the original entry path", 1}};
  EXPECT_EQ(c, expected);
  EXPECT_THROW(derive_constraints(std::vector<ModificationPoint>{}, "x", nullptr), Error);
}

const std::vector<SemanticConstraint> kTwoConstraints = {{"first property", 0}, {"second property", 1}};

TEST(Synthesize, ThreeVariantsIncludingCandidate) {
  auto p = rule_provider({{{"task: variants"}, fenced("fn v1() {}\n") + fenced("fn v2() {}\n") + fenced("fn v3() {}\n")},
                          {{"task: test"}, fenced("assert_eq!(1 + 1, 2);\n")}});
  TestGenOptions opts;
  opts.variant_count = 3;
  const auto s = synthesize(kTwoConstraints, "fn main() {}\n", &p, opts);
  ASSERT_EQ(s.variants.size(), 3u);
  EXPECT_EQ(s.variants[0], "fn main() {}\n");
  EXPECT_EQ(s.variants[1], "fn v1() {}\n");
  EXPECT_FALSE(s.tests.smoke_only);
}

TEST(Synthesize, OneTestFunctionPerConstraint) {
  auto p = rule_provider({{{"task: test"}, fenced("assert!(true);\n")}});
  const auto s = synthesize(kTwoConstraints, "fn main() {}\n", &p);
  EXPECT_EQ(s.tests.test_names, (std::vector<std::string>{"akira_generated_c0", "akira_generated_c1"}));
  EXPECT_EQ(s.tests.covers, (std::vector<std::vector<std::size_t>>{{0}, {1}}));
  std::size_t fns = 0;
  for (std::size_t pos = 0; (pos = s.tests.module_text.find("#[test]", pos)) != std::string::npos; ++pos) ++fns;
  EXPECT_EQ(fns, kTwoConstraints.size());
  EXPECT_NE(s.tests.module_text.find("mod akira_generated_tests"), std::string::npos);
  EXPECT_NE(s.tests.module_text.find("// first property"), std::string::npos);
  EXPECT_NE(s.tests.module_text.find("        assert!(true);"), std::string::npos);
}

TEST(Synthesize, ProviderDownGivesCandidateAndSmokeSuite) {
  ScriptedProvider down;
  const auto s = synthesize(kTwoConstraints, "fn main() {}\n", &down);
  EXPECT_EQ(s.variants, (std::vector<std::string>{"fn main() {}\n"}));
  EXPECT_TRUE(s.tests.smoke_only);
  EXPECT_EQ(s.tests.test_names, (std::vector<std::string>{"akira_generated_smoke"}));
  EXPECT_NE(s.tests.module_text.find("super::main();"), std::string::npos);
  EXPECT_EQ(smoke_suite("pub fn lib() {}\n").module_text.find("super::main"), std::string::npos);
}

TEST(Synthesize, DuplicateVariantsDropped) {
  auto p = rule_provider({{{"task: variants"}, fenced("fn main() {}\n") + fenced("fn a() {}\n") + fenced("fn a() {}\n")}});
  TestGenOptions opts;
  opts.variant_count = 5;
  const auto s = synthesize(kTwoConstraints, "fn main() {}\n", &p, opts);
  EXPECT_EQ(s.variants.size(), 2u);
  opts.variant_count = 0;
  EXPECT_THROW(synthesize(kTwoConstraints, "x", &p, opts), Error);
}

TEST(Validate, Examples) {
  TestSuite suite;
  suite.test_names = {"t0", "t1"};
  auto pass = ScriptedRunner::always(true);
  EXPECT_TRUE(validate(std::vector<std::string>{"v"}, suite, pass).accepted);

  EXPECT_FALSE(validate(std::vector<std::string>{}, suite, pass).accepted);

  auto seq = ScriptedRunner::sequence({{true, false}, {true, true}});
  const auto v = validate(std::vector<std::string>{"a", "b"}, suite, seq);
  EXPECT_TRUE(v.accepted);
  EXPECT_EQ(v.matrix, (PassMatrix{{true, false}, {true, true}}));
  EXPECT_EQ(v.variants_tried, 2u);
  EXPECT_EQ(v.tests_generated, 2u);
}

TEST(Validate, RunnerFailureIsAllFailRow) {
  TestSuite suite;
  suite.test_names = {"t0", "t1", "t2"};
  auto runner = ScriptedRunner::sequence({{true, true, true}});
  const auto v = validate(std::vector<std::string>{"a", "b"}, suite, runner);
  EXPECT_EQ(v.matrix[1], (std::vector<bool>{false, false, false}));
  EXPECT_TRUE(v.accepted);
}

TEST(Validate, RandomMatricesMatchBruteForce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = rng() % 5, cols = 1 + rng() % 4;
    std::vector<std::vector<bool>> m(rows, std::vector<bool>(cols));
    for (auto& r : m)
      for (std::size_t c = 0; c < cols; ++c) r[c] = rng() % 4 != 0;
    bool brute = false;
    for (const auto& r : m) {
      bool all = true;
      for (bool b : r) all = all && b;
      brute = brute || all;
    }
    TestSuite suite;
    for (std::size_t c = 0; c < cols; ++c) suite.test_names.push_back("t" + std::to_string(c));
    auto runner = ScriptedRunner::sequence(m);
    std::vector<std::string> variants(rows, "v");
    const auto v = validate(variants, suite, runner, 4);
    EXPECT_EQ(v.matrix, m);
    EXPECT_EQ(v.accepted, brute);
    EXPECT_EQ(accepted_by_matrix(v.matrix), brute);
  }
}

TEST(Validate, ParallelRulesMatchSequential) {
  TestSuite suite;
  suite.test_names = {"a", "b"};
  const auto script = json::parse(R"({"rules": [{"contains": "bad", "result": [true, false]}], "default": "pass"})");
  std::vector<std::string> variants = {"ok1", "bad", "ok2", "bad again", "ok3"};
  auto r1 = ScriptedRunner::from_json(script);
  auto r4 = ScriptedRunner::from_json(script);
  EXPECT_TRUE(r1.parallel_safe());
  EXPECT_EQ(validate(variants, suite, r1, 1).matrix, validate(variants, suite, r4, 4).matrix);
}

TEST(ScriptedRunner, ScriptFormats) {
  auto r = ScriptedRunner::from_json(json::parse(R"({"sequence": ["fail", true, [true]]})"));
  const std::vector<std::string> names = {"x", "y"};
  EXPECT_EQ(r.run("p", names), (std::vector<bool>{false, false}));
  EXPECT_EQ(r.run("p", names), (std::vector<bool>{true, true}));
  EXPECT_EQ(r.run("p", names), (std::vector<bool>{true, false}));
  try {
    r.run("p", names);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RunnerFailure);
  }
  EXPECT_EQ(r.calls(), 4u);
  EXPECT_THROW(ScriptedRunner::from_json(json::parse(R"({"default": "maybe"})")), Error);
}

TEST(TestGenAgent, BothBackendsDownRejectsWithoutThrowing) {
  ScriptedProvider down;
  ScriptedRunner runner;  // empty script: every run fails
  TestGenAgent agent(&down, runner);
  const auto ev = agent.evaluate("fn main() {}\n");
  EXPECT_FALSE(ev.verdict.accepted);
  EXPECT_EQ(ev.variants.size(), 1u);
  EXPECT_TRUE(ev.tests.smoke_only);
}

TEST(TestGenAgent, TraceabilityOnScriptedRun) {
  auto p = rule_provider({{{"task: summarize"}, "Alignment | l1 | a\nBoundsCheck | l2 | b\n"},
                          {{"task: constraints"}, "1 | aligned\n2 | in bounds\n2 | also in bounds\n"},
                          {{"task: variants"}, fenced("fn main() { let _v = 1; }\n")},
                          {{"task: test"}, fenced("assert!(true);\n")}});
  auto runner = ScriptedRunner::always(true);
  TestGenAgent agent(&p, runner);
  const auto ev = agent.evaluate("fn main() {}\n");
  EXPECT_TRUE(ev.verdict.accepted);
  ASSERT_EQ(ev.constraints.size(), 3u);
  for (const auto& c : ev.constraints) EXPECT_LT(c.derived_from, ev.points.size());
  ASSERT_EQ(ev.tests.covers.size(), ev.tests.test_names.size());
  for (const auto& cov : ev.tests.covers) {
    EXPECT_GE(cov.size(), 1u);
    for (auto idx : cov) EXPECT_LT(idx, ev.constraints.size());
  }
  EXPECT_EQ(ev.verdict.variants_tried, 2u);
  EXPECT_EQ(runner.calls(), 2u);
}

TEST(PassingVariants, OrderedByEditDistance) {
  Evaluation ev;
  ev.variants = {"a\nb\nc\n", "x\ny\nz\n", "a\nb\nd\n", "a\nq\nd\n"};
  ev.verdict.matrix = {{false}, {true}, {true}, {true}};
  EXPECT_EQ(passing_variants_by_distance(ev), (std::vector<std::size_t>{2, 3, 1}));
  ev.verdict.matrix[0] = {true};
  EXPECT_EQ(passing_variants_by_distance(ev).front(), 0u);
}

TEST(ConfusionMatrix, RatesSumToOne) {
  FixedValidator rejecting(false);
  const std::vector<LabeledCandidate> set = {{"a", true}, {"b", true}, {"c", false}, {"d", false}};
  const auto r = confusion_matrix(set, rejecting);
  EXPECT_DOUBLE_EQ(r.true_positive, 0.5);
  EXPECT_DOUBLE_EQ(r.false_positive, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy(), 0.5);
  FixedValidator accepting(true);
  const auto r2 = confusion_matrix(set, accepting);
  EXPECT_DOUBLE_EQ(r2.false_negative + r2.true_negative, 1.0);
}

TEST(CargoOutput, ParsesPerTestResults) {
  const std::vector<std::string> names = {"akira_generated_c0", "akira_generated_c1", "akira_generated_c2"};
  const std::string out =
      "running 3 tests\n"
      "test akira_generated_tests::akira_generated_c0 ... ok\n"
      "test akira_generated_tests::akira_generated_c1 ... FAILED\n"
      "test other::xakira_generated_c2 ... ok\n"
      "\ntest result: FAILED. 2 passed; 1 failed; 0 ignored\n";
  EXPECT_EQ(CargoTestRunner::parse_output(out, names), (std::vector<bool>{true, false, false}));
  try {
    CargoTestRunner::parse_output("error[E0425]: cannot find value\n", names);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RunnerFailure);
  }
}

TEST(CargoRunner, RunsGeneratedSuite) {
  if (!CargoTestRunner::available()) GTEST_SKIP() << "cargo not installed";
  TestSuite suite;
  suite.test_names = {"akira_generated_c0", "akira_generated_c1"};
  suite.module_text =
      "\n#[cfg(test)]\nmod akira_generated_tests {\n    use super::*;\n"
      "    #[test]\n    fn akira_generated_c0() { assert_eq!(double(2), 4); }\n"
      "    #[test]\n    fn akira_generated_c1() { assert_eq!(double(3), 7); }\n}\n";
  CargoTestRunner runner;
  const std::vector<std::string> variants = {"fn double(x: i32) -> i32 { x * 2 }\nfn main() {}\n",
                                             "fn double(x: i32) -> i32 { x + x + 1 }\nfn main() {}\n",
                                             "fn double(x: i32) -> i32 { x * }\nfn main() {}\n"};
  const auto v = validate(variants, suite, runner, 2);
  EXPECT_EQ(v.matrix, (PassMatrix{{true, false}, {false, true}, {false, false}}));
  EXPECT_FALSE(v.accepted);
}

}  // namespace
}  // namespace akira

#pragma once

#include <filesystem>
#include <algorithm>
#include <memory>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "akira/detection.hpp"
#include "akira/fsm.hpp"
#include "akira/provider.hpp"
#include "akira/text.hpp"
#include "akira/validation.hpp"

namespace akira::testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(AKIRA_FIXTURES) / rel; }

/// Mock provider, detector, runner and validator built from one sidecar script.
struct MockRig {
  ScriptedProvider provider;
  ScriptedDetector detector;
  ScriptedRunner runner;
  std::unique_ptr<TestGenAgent> validator;

  explicit MockRig(const nlohmann::json& script, TestGenOptions options = {})
      : provider(ScriptedProvider::from_json(script.value("provider", nlohmann::json::object()))),
        detector(ScriptedDetector::from_json(script.at("detector"))),
        runner(script.contains("runner") ? ScriptedRunner::from_json(script.at("runner")) : ScriptedRunner::always(true)),
        validator(std::make_unique<TestGenAgent>(&provider, runner, options)) {}

  static std::unique_ptr<MockRig> from_sidecar(const std::filesystem::path& mock_json, TestGenOptions options = {}) {
    return std::make_unique<MockRig>(nlohmann::json::parse(read_file(mock_json)), options);
  }

  Backends backends() { return Backends{detector, provider, *validator}; }
};

/// Validator with a fixed answer.
class FixedValidator final : public SemanticValidator {
 public:
  explicit FixedValidator(bool accept) : accept_(accept) {}
  Evaluation evaluate(const std::string& candidate) override {
    ++calls;
    Evaluation ev;
    ev.variants = {candidate};
    ev.verdict.accepted = accept_;
    ev.verdict.variants_tried = 1;
    ev.verdict.tests_generated = 1;
    ev.verdict.matrix = {{accept_}};
    return ev;
  }
  int calls = 0;

 private:
  bool accept_;
};

inline std::string fenced(const std::string& code) { return "```rust\n" + code + "```\n"; }

/// A scripted repair chain "// gen 0" -> "// gen 1" -> ... with random UB counts per
/// generation, random weights and budget. Some chains end in a clean generation.
struct RandomScenario {
  nlohmann::json script;
  SessionConfig config;
  std::string code;
};

inline RandomScenario random_scenario(std::uint64_t seed) {
  static const char* kLabels[kChannelCount] = {"alloc", "global", "func_call", "unaligned", "data_race"};
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto gen = [](int k) { return "// gen " + std::to_string(k) + "\n"; };

  RandomScenario out;
  const int generations = uniform(4, 10);
  const bool ends_clean = uniform(0, 2) == 0;
  nlohmann::json provider_rules = nlohmann::json::array();
  nlohmann::json detector_rules = nlohmann::json::array();
  for (int k = 0; k < generations; ++k) {
    nlohmann::json categories = nlohmann::json::array();
    if (!(ends_clean && k == generations - 1)) {
      const bool spike = k > 0 && uniform(0, 3) == 0;  // saturating burst, large enough to trip the jump rule
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        const int n = spike ? uniform(6, 10) : uniform(0, 3) == 0 ? uniform(0, 10) : uniform(0, 2);
        for (int i = 0; i < n; ++i) categories.push_back(kLabels[c]);
      }
      if (categories.empty()) categories.push_back("alloc");
    }
    detector_rules.push_back({{"contains", gen(k)}, {"report", {{"categories", categories}}}});
    const int next = std::min(k + 1, generations - 1);
    provider_rules.push_back({{"contains", {"task: repair", gen(k)}},
                              {"response", fenced(gen(next) + "fn main() {}\n")}});
  }
  out.script = {{"provider", {{"rules", provider_rules}}},
                {"detector", {{"rules", detector_rules}}},
                {"runner", {{"default", "pass"}}}};
  WeightVector w;
  for (auto& x : w.w) x = 0.05 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  out.config.weights = w.normalized();
  out.config.max_transitions = static_cast<std::size_t>(uniform(6, 20));
  out.config.rng_seed = seed;
  out.code = gen(0) + "fn main() {}\n";
  return out;
}

}  // namespace akira::testing

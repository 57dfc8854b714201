#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "akira/config.hpp"
#include "akira/fsm.hpp"

namespace akira {

inline constexpr std::string_view kReportSchema = "akira-report/1";
inline constexpr std::string_view kMockSuffix = ".mock.json";
inline constexpr std::string_view kRepairedSuffix = ".repaired.rs";

/// "mock" | "http", "mock" | "miri", "mock" | "cargo".
struct BackendChoice {
  std::string provider = "mock";
  std::string detector = "mock";
  std::string runner = "mock";

  /// Throws InvalidArgument on unknown names or a missing http configuration.
  void validate() const;
  bool needs_script() const { return provider == "mock" || detector == "mock" || runner == "mock"; }
};

struct HarnessOptions {
  RunConfig config;
  BackendChoice backends;
  std::size_t parallelism = 1;
  std::filesystem::path trace_dir;  // empty: nothing is written there
  bool write_repaired = true;       // <stem>.repaired.rs next to the input on QF
};

struct SampleResult {
  std::string name;  // file name of the sample
  Outcome outcome;
  std::string error;     // setup failure; the session never ran
  nlohmann::json trace;  // null when the session never ran
  std::vector<KnowledgeEntry> learned;
  std::optional<std::string> repaired_code;

  bool passed() const noexcept { return error.empty() && outcome.final_clean; }
  bool exec() const noexcept { return error.empty() && outcome.exec_accepted; }
  bool succeeded() const noexcept { return error.empty() && outcome.terminal == StateId::QF; }
};

struct CorpusResult {
  std::vector<SampleResult> samples;  // ordered by name
  double pass_rate = 0.0;
  double exec_rate = 0.0;
  double success_rate = 0.0;
  double mean_agent_invocations = 0.0;
  double mean_hallucination_score = 0.0;
  std::size_t rollbacks = 0;
  std::chrono::milliseconds mean_wall_time{0};
};

/// Recomputes every aggregate from the samples.
CorpusResult aggregate(std::vector<SampleResult> samples);

/// *.rs files directly inside `dir` (repaired outputs excluded), sorted by name.
std::vector<std::filesystem::path> list_samples(const std::filesystem::path& dir);

/// Repairs one file. Setup problems (unreadable file, missing mock script, empty program)
/// are reported in SampleResult::error, never thrown.
SampleResult repair_file(const std::filesystem::path& file, const HarnessOptions& options,
                         const KnowledgeBase& kb = {});

/// Repairs every sample with a bounded worker pool. Each sample starts from the same
/// knowledge snapshot; what the samples learn is merged afterwards in name order and
/// appended to config.kb_path when set. Writes report.json, timing.json and the traces
/// into trace_dir. Throws InvalidArgument when the directory has no samples.
CorpusResult repair_corpus(const std::filesystem::path& dir, const HarnessOptions& options);

/// Structured report: no wall-clock data, stable across runs and worker counts.
nlohmann::json report_json(const CorpusResult& result);
CorpusResult corpus_from_report(const nlohmann::json& j);
nlohmann::json timing_json(const CorpusResult& result);
std::string format_report(const CorpusResult& result);

struct PipelineSpec {
  std::string name;
  double temperature = kDefaultTemperature;
  bool rollback = false;
};

/// low temperature without rollback, high temperature without rollback,
/// high temperature with rollback.
std::vector<PipelineSpec> default_pipelines();

struct PipelineResult {
  PipelineSpec spec;
  CorpusResult corpus;
};

struct ExperimentResult {
  std::vector<PipelineResult> pipelines;
};

/// Runs the corpus once per pipeline, each from the same starting knowledge.
/// Traces go to trace_dir/<pipeline>/, the comparison to trace_dir/experiment.json.
ExperimentResult run_experiment(const std::filesystem::path& dir, const HarnessOptions& options,
                                const std::vector<PipelineSpec>& pipelines = default_pipelines());

nlohmann::json experiment_json(const ExperimentResult& result);
std::string format_experiment(const ExperimentResult& result);

}  // namespace akira

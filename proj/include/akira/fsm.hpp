#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "akira/agents.hpp"
#include "akira/detection.hpp"
#include "akira/provider.hpp"
#include "akira/snapshot.hpp"
#include "akira/state.hpp"
#include "akira/validation.hpp"
#include "akira/waveform.hpp"

namespace akira {

struct SessionConfig {
  std::size_t max_transitions = 12;
  WeightVector weights;
  double smoothing_alpha = 0.5;
  double rollback_abs_threshold = 0.8;   // theta_abs
  double rollback_jump_threshold = 0.35;  // theta_jump
  std::size_t eval_window = 3;            // W
  double eval_variance_threshold = 0.005;  // theta_var
  double temperature = kDefaultTemperature;
  std::uint64_t rng_seed = 0;

  std::uint32_t normalization_cap = kDefaultNormalizationCap;
  bool rollback_enabled = true;
  /// Restore the step-0 snapshot instead of the lowest-E one.
  bool rollback_to_initial = false;

  /// Throws InvalidArgument naming the first out-of-range field.
  void validate() const;
};

/// Semantic check attached to a transition.
struct EvaluationNote {
  std::string trigger;  // "stable" or "eval_point"
  bool accepted = false;
  std::size_t variants_tried = 0;
  std::size_t tests_generated = 0;
  std::optional<std::size_t> shipped_variant;
};

struct TransitionRecord {
  int step = 0;
  StateId from = StateId::Q0;
  StateId to = StateId::Q0;
  SignalChannels signals;
  NormalizedSignals normalized;
  ChannelValues smoothed{};
  double e = 0.0;
  std::size_t ub_count = 0;
  bool compiled = true;
  std::vector<std::string> unmapped;
  std::string action_summary;
  std::optional<RepairAction> action;
  std::optional<SelectionTier> tier;
  int steps_used = 0;
  SnapshotId snapshot_before;
  SnapshotId snapshot_after;
  std::string hash_before;
  std::string hash_after;
  std::optional<EvaluationNote> evaluation;
};

struct SessionMetrics {
  std::size_t agent_invocations = 0;
  std::map<std::string, std::size_t> invocations_by_kind;  // "modify/fast" -> n
  std::size_t rollbacks = 0;
  std::size_t evaluations = 0;
  std::size_t degenerate_candidates = 0;
  std::size_t provider_failures = 0;
  double hallucination_score = 0.0;
  std::chrono::milliseconds wall_time{0};  // not part of any trace
};

struct Outcome {
  StateId terminal = StateId::QErr;
  SnapshotId final_snapshot;
  std::string final_hash;
  std::string reason;
  std::size_t final_ub_count = 0;
  bool final_clean = false;  // last detection of the final snapshot was clean
  bool exec_accepted = false;
  SessionMetrics metrics;
};

struct Backends {
  Detector& detector;
  GenerationProvider& provider;
  SemanticValidator& validator;
  const PromptLibrary& prompts = PromptLibrary::builtin();
  const ChannelMap& channels = ChannelMap::builtin();
};

/// One repair of one program. Strictly sequential; movable, never shared.
struct RepairSession {
  SessionConfig config;
  StateId current = StateId::Q0;
  SnapshotStore snapshots;
  std::vector<TransitionRecord> trace;
  Waveform waveform;
  std::shared_ptr<KnowledgeBase> kb;
  std::uint64_t rng_seed = 0;

  SnapshotId initial;
  SnapshotId working;
  /// point_snapshots[k] is the snapshot measured by waveform point k.
  std::vector<SnapshotId> point_snapshots;
  std::mt19937_64 rng;
  bool force_slow = false;
  std::optional<DetectionReport> last_report;
  std::optional<ExecVerdict> last_verdict;
  std::optional<Outcome> outcome;
  SessionMetrics metrics;

  struct PendingEntry {
    Fingerprint fingerprint;
    AgentKind agent;
    ThinkingMode mode;
    double e_before;
  };
  std::optional<PendingEntry> pending;
};

/// Throws EmptyProgram on empty (or whitespace-only) code and InvalidArgument on a bad config.
/// A null kb gets a fresh private store.
RepairSession init_session(std::string code, SessionConfig config = {}, std::shared_ptr<KnowledgeBase> kb = nullptr);

/// Detects the working snapshot, extends the waveform and takes exactly one transition.
/// Throws TerminalState when the session already finished.
const TransitionRecord& step(RepairSession& session, const Backends& backends);

/// Steps until QF or QErr.
Outcome run(RepairSession& session, const Backends& backends);

SnapshotId checkpoint(RepairSession& session, SourceSnapshot snapshot);

/// Makes `target` the working snapshot and records a QRollback transition.
/// Throws UnknownSnapshot.
const SourceSnapshot& restore(RepairSession& session, const SnapshotId& target);

/// Index of the earliest minimum E among the recorded points (or 0 when rollback_to_initial).
std::size_t rollback_target_index(std::span<const double> e, bool to_initial = false);

const SourceSnapshot& working_snapshot(const RepairSession& session);

}  // namespace akira

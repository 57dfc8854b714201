#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "akira/provider.hpp"
#include "akira/snapshot.hpp"
#include "akira/state.hpp"
#include "akira/waveform.hpp"

namespace akira {

/// Named prompt templates with {code}, {keywords}, {history} (and friends) placeholders.
class PromptLibrary {
 public:
  /// Templates embedded from data/prompts.
  static const PromptLibrary& builtin();
  /// Built-in templates overridden by any <name>.txt found in `dir`.
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  static std::string repair_name(AgentKind agent, ThinkingMode mode);

 private:
  std::map<std::string, std::string> templates_;
};

/// Replaces every {key} occurrence.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

struct RepairContext {
  std::vector<std::string> keywords;
  std::string history;
  std::string code_excerpt;
};

struct RepairAction {
  AgentKind agent = AgentKind::Modify;
  ThinkingMode mode = ThinkingMode::Fast;
  RepairContext context;
};

enum class RepairOutcome { Improved, Worsened, Fixed };

std::string_view to_string(RepairOutcome o) noexcept;
std::optional<RepairOutcome> parse_outcome(std::string_view text) noexcept;

/// Signal vector rounded to one decimal per channel plus the dominant UB category.
struct Fingerprint {
  std::array<int, kChannelCount> tenths{};
  std::string dominant;

  auto operator<=>(const Fingerprint&) const = default;
  std::string to_string() const;
};

Fingerprint make_fingerprint(const NormalizedSignals& signals, std::string dominant_category);
/// Most frequent category; earliest in document order on ties; "none" when empty.
std::string dominant_category(std::span<const UbFinding> findings);

struct KnowledgeEntry {
  Fingerprint fingerprint;
  AgentKind agent = AgentKind::Modify;
  ThinkingMode mode = ThinkingMode::Fast;
  RepairOutcome outcome = RepairOutcome::Improved;
  double delta_e = 0.0;

  bool valid() const noexcept;
};

nlohmann::json to_json(const KnowledgeEntry& e);
KnowledgeEntry knowledge_entry_from_json(const nlohmann::json& j);

struct RankedChoice {
  AgentKind agent;
  ThinkingMode mode;
  std::size_t fixed = 0;
  std::size_t improved = 0;
  std::size_t worsened = 0;

  bool positive() const noexcept { return fixed + improved > 0; }
  bool net_negative() const noexcept { return worsened > fixed + improved; }
};

/// Static preference order used for tie-breaks: Replace, Assert, Modify, Knowledge.
int static_rank(AgentKind a) noexcept;

/// Append-only store of repair experience. Reads may run concurrently; writes are serialized.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  KnowledgeBase(const KnowledgeBase& other);
  KnowledgeBase& operator=(const KnowledgeBase& other);

  /// JSON lines, one entry per line. A missing file is an empty store.
  static KnowledgeBase load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  /// Appends entries [from, size()) to `path`.
  void append_to(const std::filesystem::path& path, std::size_t from) const;

  /// Throws InvalidKnowledgeEntry when delta_e disagrees with the outcome.
  void record(const KnowledgeEntry& entry);
  /// Ranked by (fixed, improved, -worsened), ties by static_rank then mode (fast first).
  std::vector<RankedChoice> query(const Fingerprint& fp) const;
  std::vector<KnowledgeEntry> entries() const;
  std::vector<KnowledgeEntry> matching(const Fingerprint& fp) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::vector<KnowledgeEntry> entries_;
};

enum class SelectionTier { Knowledge, Provider, Static };
std::string_view to_string(SelectionTier t) noexcept;

struct SelectionInput {
  StateId current = StateId::Q0;
  NormalizedSignals signals;
  std::vector<std::string> keywords;
  std::string dominant = "none";
  std::size_t loc = 0;
  std::string code;
  std::string history;
  bool force_slow = false;  // set after a rejecting semantic evaluation
  double temperature = kDefaultTemperature;
};

struct Selection {
  StateId next;
  RepairAction action;
  SelectionTier tier;
};

inline constexpr std::size_t kSlowLocThreshold = 60;

/// Table-driven fallback: ordered (agent, mode) preferences for a keyword set.
std::vector<std::pair<AgentKind, ThinkingMode>> static_preferences(std::span<const std::string> keywords,
                                                                   std::size_t loc);

/// FixAgent: knowledge base majority, then the provider's pick, then the static policy.
/// Pairs the knowledge base shows as net-harmful for this fingerprint are skipped by the
/// provider and static tiers. Never throws for provider problems.
Selection select_next(const SelectionInput& input, const KnowledgeBase& kb, GenerationProvider* provider,
                      std::mt19937_64& rng, const PromptLibrary& prompts = PromptLibrary::builtin());

/// Pulls the program out of a model reply: the first ```rust (or bare ```) fence, else
/// the whole reply. Empty or unterminated fences are degenerate.
std::optional<std::string> extract_code(std::string_view reply);

struct AgentOutput {
  std::string code;
  int steps_used = 0;
};

/// Runs one repair agent. Throws DegenerateCandidate on empty / unparseable replies and
/// ProviderUnavailable when the backend fails.
AgentOutput apply_agent(const RepairAction& action, const std::string& code, GenerationProvider& provider,
                        double temperature, std::uint64_t seed,
                        const PromptLibrary& prompts = PromptLibrary::builtin());

/// apply_agent() wrapped into a new snapshot produced by the agent's state at `step`.
/// The input snapshot is only read.
SourceSnapshot apply(const RepairAction& action, const SourceSnapshot& snapshot, GenerationProvider& provider,
                     double temperature, std::uint64_t seed, int step,
                     const PromptLibrary& prompts = PromptLibrary::builtin());

}  // namespace akira

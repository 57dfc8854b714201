#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace akira {

/// FSM states. Q0 is the unique initial state; QF and QErr are terminal.
enum class StateId {
  Q0,
  QAssert,
  QModify,
  QReplace,
  QKnowledge,
  QRollback,
  QErr,
  QF,
};

inline constexpr std::array<StateId, 8> kAllStates = {
    StateId::Q0,         StateId::QAssert,   StateId::QModify, StateId::QReplace,
    StateId::QKnowledge, StateId::QRollback, StateId::QErr,    StateId::QF};

constexpr bool is_terminal(StateId s) noexcept {
  return s == StateId::QF || s == StateId::QErr;
}

enum class ThinkingMode { Fast, Slow };

enum class AgentKind { Assert, Modify, Replace, Knowledge };

inline constexpr std::array<AgentKind, 4> kAllAgents = {
    AgentKind::Assert, AgentKind::Modify, AgentKind::Replace, AgentKind::Knowledge};

// Fast is single pass; Slow chains plan -> act -> check.
inline constexpr int kFastStepBudget = 1;
inline constexpr int kSlowStepBudget = 3;

constexpr int step_budget(ThinkingMode m) noexcept {
  return m == ThinkingMode::Fast ? kFastStepBudget : kSlowStepBudget;
}

constexpr StateId state_for(AgentKind a) noexcept {
  switch (a) {
    case AgentKind::Assert: return StateId::QAssert;
    case AgentKind::Modify: return StateId::QModify;
    case AgentKind::Replace: return StateId::QReplace;
    case AgentKind::Knowledge: return StateId::QKnowledge;
  }
  return StateId::QErr;
}

constexpr std::optional<AgentKind> agent_for(StateId s) noexcept {
  switch (s) {
    case StateId::QAssert: return AgentKind::Assert;
    case StateId::QModify: return AgentKind::Modify;
    case StateId::QReplace: return AgentKind::Replace;
    case StateId::QKnowledge: return AgentKind::Knowledge;
    default: return std::nullopt;
  }
}

std::string_view to_string(StateId s) noexcept;
std::string_view to_string(ThinkingMode m) noexcept;
std::string_view to_string(AgentKind a) noexcept;

std::optional<StateId> parse_state(std::string_view text) noexcept;
std::optional<ThinkingMode> parse_mode(std::string_view text) noexcept;
/// Case-insensitive; accepts "assert", "Modify", "REPLACE", ...
std::optional<AgentKind> parse_agent(std::string_view text) noexcept;

}  // namespace akira

#include "akira/state.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace akira {

std::string_view to_string(StateId s) noexcept {
  switch (s) {
    case StateId::Q0: return "Q0";
    case StateId::QAssert: return "QAssert";
    case StateId::QModify: return "QModify";
    case StateId::QReplace: return "QReplace";
    case StateId::QKnowledge: return "QKnowledge";
    case StateId::QRollback: return "QRollback";
    case StateId::QErr: return "QErr";
    case StateId::QF: return "QF";
  }
  return "?";
}

std::string_view to_string(ThinkingMode m) noexcept {
  return m == ThinkingMode::Fast ? "fast" : "slow";
}

std::string_view to_string(AgentKind a) noexcept {
  switch (a) {
    case AgentKind::Assert: return "assert";
    case AgentKind::Modify: return "modify";
    case AgentKind::Replace: return "replace";
    case AgentKind::Knowledge: return "knowledge";
  }
  return "?";
}

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::ranges::transform(out, out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::optional<StateId> parse_state(std::string_view text) noexcept {
  for (StateId s : kAllStates)
    if (to_string(s) == text) return s;
  return std::nullopt;
}

std::optional<ThinkingMode> parse_mode(std::string_view text) noexcept {
  const std::string t = lower(text);
  if (t == "fast") return ThinkingMode::Fast;
  if (t == "slow") return ThinkingMode::Slow;
  return std::nullopt;
}

std::optional<AgentKind> parse_agent(std::string_view text) noexcept {
  const std::string t = lower(text);
  for (AgentKind a : kAllAgents)
    if (to_string(a) == t) return a;
  return std::nullopt;
}

}  // namespace akira

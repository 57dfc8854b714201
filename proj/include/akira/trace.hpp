#pragma once

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "akira/fsm.hpp"
#include "akira/provider.hpp"

namespace akira {

inline constexpr std::string_view kTraceSchema = "akira-trace/1";

nlohmann::json to_json(const SessionConfig& c);
SessionConfig session_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TransitionRecord& r);
nlohmann::json to_json(const SessionMetrics& m);  // wall time omitted
nlohmann::json to_json(const Outcome& o);         // wall time omitted
Outcome outcome_from_json(const nlohmann::json& j);

/// Full session document. Contains no wall-clock data, so seeded mock runs are byte-identical.
nlohmann::json trace_document(const RepairSession& session, std::span<const ProviderCallRecord> provider_log = {});

/// Two-space indented dump with a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace akira

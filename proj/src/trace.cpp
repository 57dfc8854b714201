#include "akira/trace.hpp"

#include "akira/error.hpp"

namespace akira {

using nlohmann::json;

namespace {

json channels_json(const SignalChannels& c) {
  json j = json::object();
  for (std::size_t i = 0; i < kChannelCount; ++i)
    j[std::string(1, channel_letter(static_cast<Channel>(i)))] = c.counts[i];
  return j;
}

json values_json(const ChannelValues& v) {
  json j = json::object();
  for (std::size_t i = 0; i < kChannelCount; ++i) j[std::string(1, channel_letter(static_cast<Channel>(i)))] = v[i];
  return j;
}

StateId state_from(const json& j) {
  auto s = parse_state(j.get<std::string>());
  if (!s) throw Error(ErrorKind::ParseError, "unknown state " + j.get<std::string>());
  return *s;
}

}  // namespace

json to_json(const SessionConfig& c) {
  return json{{"max_transitions", c.max_transitions},
              {"weights", c.weights.w},
              {"smoothing_alpha", c.smoothing_alpha},
              {"rollback_abs_threshold", c.rollback_abs_threshold},
              {"rollback_jump_threshold", c.rollback_jump_threshold},
              {"eval_window", c.eval_window},
              {"eval_variance_threshold", c.eval_variance_threshold},
              {"temperature", c.temperature},
              {"rng_seed", c.rng_seed},
              {"normalization_cap", c.normalization_cap},
              {"rollback_enabled", c.rollback_enabled},
              {"rollback_to_initial", c.rollback_to_initial}};
}

SessionConfig session_config_from_json(const json& j) {
  try {
    SessionConfig c;
    c.max_transitions = j.at("max_transitions").get<std::size_t>();
    c.weights.w = j.at("weights").get<ChannelValues>();
    c.smoothing_alpha = j.at("smoothing_alpha").get<double>();
    c.rollback_abs_threshold = j.at("rollback_abs_threshold").get<double>();
    c.rollback_jump_threshold = j.at("rollback_jump_threshold").get<double>();
    c.eval_window = j.at("eval_window").get<std::size_t>();
    c.eval_variance_threshold = j.at("eval_variance_threshold").get<double>();
    c.temperature = j.at("temperature").get<double>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    c.normalization_cap = j.at("normalization_cap").get<std::uint32_t>();
    c.rollback_enabled = j.at("rollback_enabled").get<bool>();
    c.rollback_to_initial = j.at("rollback_to_initial").get<bool>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("session config: ") + e.what());
  }
}

json to_json(const TransitionRecord& r) {
  json j{{"step", r.step},
         {"from", to_string(r.from)},
         {"to", to_string(r.to)},
         {"signals", channels_json(r.signals)},
         {"normalized", values_json(r.normalized.values)},
         {"smoothed", values_json(r.smoothed)},
         {"E", r.e},
         {"ub_count", r.ub_count},
         {"compiled", r.compiled},
         {"unmapped_categories", r.unmapped},
         {"action_summary", r.action_summary},
         {"snapshot_before", r.snapshot_before.value},
         {"snapshot_after", r.snapshot_after.value},
         {"hash_before", r.hash_before},
         {"hash_after", r.hash_after}};
  if (r.action) {
    j["action"] = {{"agent", to_string(r.action->agent)},
                   {"mode", to_string(r.action->mode)},
                   {"keywords", r.action->context.keywords},
                   {"steps_used", r.steps_used}};
  }
  if (r.tier) j["selection_tier"] = to_string(*r.tier);
  if (r.evaluation) {
    const auto& ev = *r.evaluation;
    j["evaluation"] = {{"trigger", ev.trigger},
                       {"accepted", ev.accepted},
                       {"variants_tried", ev.variants_tried},
                       {"tests_generated", ev.tests_generated},
                       {"shipped_variant", ev.shipped_variant ? json(*ev.shipped_variant) : json(nullptr)}};
  }
  return j;
}

json to_json(const SessionMetrics& m) {
  return json{{"agent_invocations", m.agent_invocations},
              {"invocations_by_kind", m.invocations_by_kind},
              {"rollbacks", m.rollbacks},
              {"evaluations", m.evaluations},
              {"degenerate_candidates", m.degenerate_candidates},
              {"provider_failures", m.provider_failures},
              {"hallucination_score", m.hallucination_score}};
}

json to_json(const Outcome& o) {
  return json{{"terminal", to_string(o.terminal)},
              {"final_snapshot", o.final_snapshot.value},
              {"final_hash", o.final_hash},
              {"reason", o.reason},
              {"final_ub_count", o.final_ub_count},
              {"final_clean", o.final_clean},
              {"exec_accepted", o.exec_accepted},
              {"metrics", to_json(o.metrics)}};
}

Outcome outcome_from_json(const json& j) {
  try {
    Outcome o;
    o.terminal = state_from(j.at("terminal"));
    o.final_snapshot.value = j.at("final_snapshot").get<std::string>();
    o.final_hash = j.at("final_hash").get<std::string>();
    o.reason = j.at("reason").get<std::string>();
    o.final_ub_count = j.at("final_ub_count").get<std::size_t>();
    o.final_clean = j.at("final_clean").get<bool>();
    o.exec_accepted = j.at("exec_accepted").get<bool>();
    const auto& m = j.at("metrics");
    o.metrics.agent_invocations = m.at("agent_invocations").get<std::size_t>();
    o.metrics.invocations_by_kind = m.at("invocations_by_kind").get<std::map<std::string, std::size_t>>();
    o.metrics.rollbacks = m.at("rollbacks").get<std::size_t>();
    o.metrics.evaluations = m.at("evaluations").get<std::size_t>();
    o.metrics.degenerate_candidates = m.at("degenerate_candidates").get<std::size_t>();
    o.metrics.provider_failures = m.at("provider_failures").get<std::size_t>();
    o.metrics.hallucination_score = m.at("hallucination_score").get<double>();
    return o;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("outcome: ") + e.what());
  }
}

json trace_document(const RepairSession& s, std::span<const ProviderCallRecord> provider_log) {
  json transitions = json::array();
  for (const auto& r : s.trace) transitions.push_back(to_json(r));

  json waveform = json::array();
  const auto& points = s.waveform.points();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    waveform.push_back({{"step", p.step},
                        {"snapshot", k < s.point_snapshots.size() ? s.point_snapshots[k].value : ""},
                        {"raw", channels_json(p.raw)},
                        {"normalized", values_json(p.normalized.values)},
                        {"smoothed", values_json(p.smoothed)},
                        {"E", p.e}});
  }

  json snapshots = json::array();
  for (const auto& snap : s.snapshots.all()) {
    snapshots.push_back({{"id", snap.id.value},
                         {"hash", snap.hash},
                         {"producer", to_string(snap.producer)},
                         {"mode", snap.mode ? json(to_string(*snap.mode)) : json(nullptr)},
                         {"step", snap.step},
                         {"code", snap.code}});
  }

  json log = json::array();
  for (const auto& rec : provider_log) log.push_back(to_json(rec));

  json doc{{"schema", kTraceSchema},
           {"config", to_json(s.config)},
           {"transitions", std::move(transitions)},
           {"waveform", std::move(waveform)},
           {"snapshots", std::move(snapshots)},
           {"provider_log", std::move(log)}};
  doc["outcome"] = s.outcome ? to_json(*s.outcome) : json(nullptr);
  return doc;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace akira

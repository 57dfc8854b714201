#include "akira/fsm.hpp"

#include <algorithm>
#include <cstdio>

#include "akira/error.hpp"
#include "akira/text.hpp"

namespace akira {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, std::string("invalid session config: ") + what);
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::vector<std::string> keywords_of(const DetectionReport& report) {
  std::vector<std::string> out;
  for (const auto& f : report.findings)
    if (std::ranges::find(out, f.category) == out.end()) out.push_back(f.category);
  return out;
}

std::string history_of(const RepairSession& s) {
  std::vector<std::string> lines;
  for (auto it = s.trace.rbegin(); it != s.trace.rend() && lines.size() < 3; ++it)
    if (it->action) lines.push_back("step " + std::to_string(it->step) + " (E=" + fixed3(it->e) + "): " + it->action_summary);
  std::ranges::reverse(lines);
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string kind_key(AgentKind a, ThinkingMode m) {
  return std::string(to_string(a)) + "/" + std::string(to_string(m));
}

void finish(RepairSession& s, TransitionRecord& rec, StateId terminal, std::string reason) {
  rec.to = terminal;
  s.current = terminal;
  Outcome out;
  out.terminal = terminal;
  out.final_snapshot = rec.snapshot_after;
  out.final_hash = rec.hash_after;
  out.final_ub_count = s.last_report ? s.last_report->ub_count : 0;
  out.final_clean = terminal == StateId::QF || (reason != "detector unavailable" && s.last_report && s.last_report->clean());
  out.reason = std::move(reason);
  out.exec_accepted = s.last_verdict && s.last_verdict->accepted;
  s.metrics.hallucination_score = hallucination_score(s.waveform);
  out.metrics = s.metrics;
  s.outcome = std::move(out);
}

void set_after(const RepairSession& s, TransitionRecord& rec, const SnapshotId& id) {
  rec.snapshot_after = id;
  rec.hash_after = s.snapshots.get(id).hash;
}

// Runs the validator on the working snapshot. On an accepting stable check, returns the
// snapshot to ship: the candidate itself when its row passes, otherwise the closest
// passing variant that the detector also finds clean.
std::optional<SnapshotId> evaluate(RepairSession& s, const Backends& b, TransitionRecord& rec,
                                   const std::string& trigger) {
  EvaluationNote note;
  note.trigger = trigger;
  ++s.metrics.evaluations;
  const auto& code = s.snapshots.get(s.working).code;
  Evaluation ev;
  try {
    ev = b.validator.evaluate(code);
  } catch (const Error&) {
    ev = Evaluation{};
  }
  note.accepted = ev.verdict.accepted;
  note.variants_tried = ev.verdict.variants_tried;
  note.tests_generated = ev.verdict.tests_generated;
  s.last_verdict = ev.verdict;

  std::optional<SnapshotId> shipped;
  if (trigger == "stable" && ev.verdict.accepted) {
    for (std::size_t idx : passing_variants_by_distance(ev)) {
      if (idx == 0) {
        shipped = s.working;
      } else {
        DetectionReport r;
        try {
          r = b.detector.detect(ev.variants[idx]);
        } catch (const Error&) {
          continue;
        }
        if (!r.clean()) continue;
        const auto& w = s.snapshots.get(s.working);
        auto snap = SourceSnapshot::make(ev.variants[idx], w.producer, w.mode, rec.step + 1);
        shipped = s.snapshots.contains(snap.id) ? snap.id : s.snapshots.checkpoint(std::move(snap));
        s.last_report = std::move(r);
      }
      note.shipped_variant = idx;
      break;
    }
  }
  rec.evaluation = std::move(note);
  return shipped;
}

void fill_signals(TransitionRecord& rec, const WaveformPoint& p) {
  rec.signals = p.raw;
  rec.normalized = p.normalized;
  rec.smoothed = p.smoothed;
  rec.e = p.e;
}

const SourceSnapshot& do_restore(RepairSession& s, TransitionRecord rec, const SnapshotId& target) {
  const auto& snap = s.snapshots.get(target);
  rec.to = StateId::QRollback;
  set_after(s, rec, target);
  rec.action_summary = "rollback to " + target.value;
  s.working = target;
  s.current = StateId::QRollback;
  s.pending.reset();
  ++s.metrics.rollbacks;
  s.trace.push_back(std::move(rec));
  return snap;
}

}  // namespace

void SessionConfig::validate() const {
  require(max_transitions >= 1, "max_transitions must be >= 1");
  require(smoothing_alpha > 0.0 && smoothing_alpha <= 1.0, "smoothing_alpha must be in (0,1]");
  require(rollback_abs_threshold > 0.0 && rollback_abs_threshold <= 1.0, "rollback_abs_threshold must be in (0,1]");
  require(rollback_jump_threshold > 0.0 && rollback_jump_threshold <= 1.0, "rollback_jump_threshold must be in (0,1]");
  require(eval_window >= 1, "eval_window must be >= 1");
  require(eval_variance_threshold >= 0.0, "eval_variance_threshold must be >= 0");
  require(temperature >= 0.0 && temperature <= 2.0, "temperature must be in [0,2]");
  require(normalization_cap >= 1, "normalization_cap must be >= 1");
  try {
    (void)weights.normalized();
  } catch (const Error&) {
    require(false, "weights must be non-negative with a positive sum");
  }
}

RepairSession init_session(std::string code, SessionConfig config, std::shared_ptr<KnowledgeBase> kb) {
  if (trim(code).empty()) throw Error(ErrorKind::EmptyProgram, "empty program");
  config.validate();
  RepairSession s;
  s.waveform = Waveform(WaveformParams{config.weights.normalized(), config.smoothing_alpha, config.normalization_cap});
  s.config = std::move(config);
  s.kb = kb ? std::move(kb) : std::make_shared<KnowledgeBase>();
  s.rng_seed = s.config.rng_seed;
  s.rng.seed(s.rng_seed);
  s.initial = s.snapshots.checkpoint(SourceSnapshot::make(std::move(code), StateId::Q0, std::nullopt, 0));
  s.working = s.initial;
  return s;
}

const SourceSnapshot& working_snapshot(const RepairSession& session) { return session.snapshots.get(session.working); }

SnapshotId checkpoint(RepairSession& session, SourceSnapshot snapshot) {
  return session.snapshots.checkpoint(std::move(snapshot));
}

std::size_t rollback_target_index(std::span<const double> e, bool to_initial) {
  if (e.empty()) throw Error(ErrorKind::EmptyHistory, "no waveform points to roll back to");
  if (to_initial) return 0;
  return static_cast<std::size_t>(std::ranges::min_element(e) - e.begin());
}

const SourceSnapshot& restore(RepairSession& session, const SnapshotId& target) {
  if (is_terminal(session.current))
    throw Error(ErrorKind::TerminalState, "session already in " + std::string(to_string(session.current)));
  (void)session.snapshots.get(target);
  TransitionRecord rec;
  rec.step = static_cast<int>(session.trace.size());
  rec.from = session.current;
  if (!session.waveform.empty()) fill_signals(rec, session.waveform.back());
  rec.snapshot_before = session.working;
  rec.hash_before = working_snapshot(session).hash;
  return do_restore(session, std::move(rec), target);
}

const TransitionRecord& step(RepairSession& s, const Backends& b) {
  if (is_terminal(s.current) || s.outcome)
    throw Error(ErrorKind::TerminalState, "session already in " + std::string(to_string(s.current)));
  if (s.trace.size() >= s.config.max_transitions)
    throw Error(ErrorKind::TerminalState, "transition budget exhausted");

  const int t = static_cast<int>(s.trace.size());
  const SourceSnapshot& snap = working_snapshot(s);
  TransitionRecord rec;
  rec.step = t;
  rec.from = s.current;
  rec.snapshot_before = s.working;
  rec.hash_before = snap.hash;
  set_after(s, rec, s.working);

  // 1. detection -> signal vector -> waveform point
  const SignalChannels prev = s.waveform.empty() ? SignalChannels{} : s.waveform.back().raw;
  std::optional<DetectionReport> report;
  std::string detector_error;
  try {
    report = b.detector.detect(snap.code);
  } catch (const Error& e) {
    detector_error = e.what();
  }
  SignalChannels raw = prev;
  if (report && !report->compiled) {
    raw[Channel::U] += 1;
  } else if (report) {
    raw = categorize(report->findings, b.channels);
    rec.unmapped = unmapped_categories(report->findings, b.channels);
  }
  const auto& point = s.waveform.push(raw);
  s.point_snapshots.push_back(s.working);
  fill_signals(rec, point);

  if (!report) {
    s.pending.reset();
    rec.action_summary = "detector unavailable: " + detector_error;
    finish(s, rec, StateId::QErr, "detector unavailable");
    s.trace.push_back(std::move(rec));
    return s.trace.back();
  }
  rec.ub_count = report->ub_count;
  rec.compiled = report->compiled;
  const bool clean = report->clean();
  s.last_report = *report;

  // 2. feed the outcome of the previous repair back into the knowledge base
  if (s.pending) {
    const double delta = point.e - s.pending->e_before;
    const RepairOutcome outcome =
        delta > 0.0 ? RepairOutcome::Worsened : (clean ? RepairOutcome::Fixed : RepairOutcome::Improved);
    s.kb->record(KnowledgeEntry{s.pending->fingerprint, s.pending->agent, s.pending->mode, outcome, delta});
    s.pending.reset();
  }

  // 3. stable candidate -> semantic validation
  if (clean) {
    if (auto shipped = evaluate(s, b, rec, "stable")) {
      set_after(s, rec, *shipped);
      rec.action_summary = "accepted";
      finish(s, rec, StateId::QF, "repaired");
      s.trace.push_back(std::move(rec));
      return s.trace.back();
    }
    s.force_slow = true;
  }

  // 4. transition budget
  if (s.trace.size() + 1 >= s.config.max_transitions) {
    rec.action_summary = "transition limit reached";
    finish(s, rec, StateId::QErr, "max transitions");
    s.trace.push_back(std::move(rec));
    return s.trace.back();
  }

  // 5. waveform triggers
  if (s.config.rollback_enabled &&
      detect_rollback_point(s.waveform, s.config.rollback_abs_threshold, s.config.rollback_jump_threshold)) {
    const auto e = s.waveform.e_values();
    const auto& target = s.point_snapshots[rollback_target_index(e, s.config.rollback_to_initial)];
    if (target != s.working) {
      do_restore(s, std::move(rec), target);
      return s.trace.back();
    }
  }
  if (!clean && detect_eval_point(s.waveform, s.config.eval_window, s.config.eval_variance_threshold)) {
    evaluate(s, b, rec, "eval_point");
    s.force_slow = !rec.evaluation->accepted;
  }

  // 6. FixAgent picks the next agent, which produces the next candidate
  SelectionInput in;
  in.current = s.current;
  in.signals = point.normalized;
  in.keywords = keywords_of(*report);
  in.dominant = dominant_category(report->findings);
  in.loc = count_loc(snap.code);
  in.code = snap.code;
  in.history = history_of(s);
  in.force_slow = s.force_slow;
  in.temperature = s.config.temperature;
  const Selection sel = select_next(in, *s.kb, &b.provider, s.rng, b.prompts);
  const std::uint64_t seed = s.rng();
  s.force_slow = false;

  const auto& act = sel.action;
  rec.to = sel.next;
  rec.action = act;
  rec.tier = sel.tier;
  rec.action_summary = kind_key(act.agent, act.mode) + " via " + std::string(to_string(sel.tier));
  ++s.metrics.agent_invocations;
  ++s.metrics.invocations_by_kind[kind_key(act.agent, act.mode)];
  try {
    auto out = apply_agent(act, snap.code, b.provider, s.config.temperature, seed, b.prompts);
    rec.steps_used = out.steps_used;
    auto next = SourceSnapshot::make(std::move(out.code), sel.next, act.mode, t + 1);
    s.working = s.snapshots.checkpoint(std::move(next));
    set_after(s, rec, s.working);
    s.pending = RepairSession::PendingEntry{make_fingerprint(point.normalized, in.dominant), act.agent, act.mode,
                                            point.e};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateCandidate) {
      ++s.metrics.degenerate_candidates;
      rec.action_summary += ": degenerate candidate";
    } else {
      ++s.metrics.provider_failures;
      rec.action_summary += ": " + std::string(e.what());
    }
  }
  s.current = sel.next;
  s.trace.push_back(std::move(rec));
  return s.trace.back();
}

Outcome run(RepairSession& session, const Backends& backends) {
  const auto start = std::chrono::steady_clock::now();
  while (!session.outcome) step(session, backends);
  session.metrics.wall_time =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  session.outcome->metrics.wall_time = session.metrics.wall_time;
  return *session.outcome;
}

}  // namespace akira

#include "akira/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "akira/embedded_data.hpp"
#include "akira/error.hpp"
#include "akira/text.hpp"

namespace akira {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prompts

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib = [] {
    PromptLibrary l;
    constexpr std::string_view kPrefix = "prompts/";
    for (const auto& [path, text] : embedded::files()) {
      if (!path.starts_with(kPrefix) || !path.ends_with(".txt")) continue;
      auto name = path.substr(kPrefix.size());
      name.remove_suffix(4);
      l.templates_.emplace(std::string(name), std::string(text));
    }
    return l;
  }();
  return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  PromptLibrary l = builtin();
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorKind::Io, "prompt directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    l.templates_[entry.path().stem().string()] = read_file(entry.path());
  }
  return l;
}

const std::string& PromptLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error(ErrorKind::InvalidArgument, "no prompt template named " + name);
  return it->second;
}

std::string PromptLibrary::repair_name(AgentKind agent, ThinkingMode mode) {
  return "repair_" + std::string(to_string(agent)) + "_" + std::string(to_string(mode));
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  // Single left-to-right pass so substituted text (program code with braces) is never re-expanded.
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Knowledge base

std::string_view to_string(RepairOutcome o) noexcept {
  switch (o) {
    case RepairOutcome::Improved: return "Improved";
    case RepairOutcome::Worsened: return "Worsened";
    case RepairOutcome::Fixed: return "Fixed";
  }
  return "?";
}

std::optional<RepairOutcome> parse_outcome(std::string_view text) noexcept {
  if (text == "Improved") return RepairOutcome::Improved;
  if (text == "Worsened") return RepairOutcome::Worsened;
  if (text == "Fixed") return RepairOutcome::Fixed;
  return std::nullopt;
}

std::string Fingerprint::to_string() const {
  std::ostringstream ss;
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (i) ss << ',';
    ss << tenths[i] / 10 << '.' << tenths[i] % 10;
  }
  ss << '|' << dominant;
  return ss.str();
}

Fingerprint make_fingerprint(const NormalizedSignals& signals, std::string dominant) {
  Fingerprint fp;
  for (std::size_t i = 0; i < kChannelCount; ++i)
    fp.tenths[i] = static_cast<int>(std::lround(std::clamp(signals.values[i], 0.0, 1.0) * 10.0));
  fp.dominant = std::move(dominant);
  return fp;
}

std::string dominant_category(std::span<const UbFinding> findings) {
  std::vector<std::pair<std::string, std::size_t>> counts;  // first-seen order
  for (const auto& f : findings) {
    auto it = std::ranges::find(counts, f.category, &std::pair<std::string, std::size_t>::first);
    if (it == counts.end())
      counts.emplace_back(f.category, 1);
    else
      ++it->second;
  }
  if (counts.empty()) return "none";
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i].second > counts[best].second) best = i;
  return counts[best].first;
}

bool KnowledgeEntry::valid() const noexcept {
  if (!std::isfinite(delta_e)) return false;
  return outcome == RepairOutcome::Worsened ? delta_e > 0.0 : delta_e <= 0.0;
}

json to_json(const KnowledgeEntry& e) {
  return json{{"fingerprint", {{"tenths", e.fingerprint.tenths}, {"dominant", e.fingerprint.dominant}}},
              {"agent", to_string(e.agent)},
              {"mode", to_string(e.mode)},
              {"outcome", to_string(e.outcome)},
              {"delta_e", e.delta_e}};
}

KnowledgeEntry knowledge_entry_from_json(const json& j) {
  try {
    KnowledgeEntry e;
    e.fingerprint.tenths = j.at("fingerprint").at("tenths").get<std::array<int, kChannelCount>>();
    e.fingerprint.dominant = j.at("fingerprint").at("dominant").get<std::string>();
    auto agent = parse_agent(j.at("agent").get<std::string>());
    auto mode = parse_mode(j.at("mode").get<std::string>());
    auto outcome = parse_outcome(j.at("outcome").get<std::string>());
    if (!agent || !mode || !outcome) throw Error(ErrorKind::ParseError, "bad knowledge entry enum value");
    e.agent = *agent;
    e.mode = *mode;
    e.outcome = *outcome;
    e.delta_e = j.at("delta_e").get<double>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::ParseError, std::string("knowledge entry: ") + ex.what());
  }
}

int static_rank(AgentKind a) noexcept {
  switch (a) {
    case AgentKind::Replace: return 0;
    case AgentKind::Assert: return 1;
    case AgentKind::Modify: return 2;
    case AgentKind::Knowledge: return 3;
  }
  return 4;
}

KnowledgeBase::KnowledgeBase(const KnowledgeBase& other) {
  std::shared_lock lock(other.mu_);
  entries_ = other.entries_;
}

KnowledgeBase& KnowledgeBase::operator=(const KnowledgeBase& other) {
  if (this == &other) return *this;
  std::vector<KnowledgeEntry> copy = other.entries();
  std::unique_lock lock(mu_);
  entries_ = std::move(copy);
  return *this;
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  KnowledgeBase kb;
  if (!std::filesystem::exists(path)) return kb;
  const std::string text = read_file(path);
  int lineno = 0;
  for (auto line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      kb.record(knowledge_entry_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kb;
}

void KnowledgeBase::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& e : entries()) out += to_json(e).dump() + "\n";
  write_file(path, out);
}

void KnowledgeBase::append_to(const std::filesystem::path& path, std::size_t from) const {
  const auto all = entries();
  if (from >= all.size()) return;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::Io, "cannot append to " + path.string());
  for (std::size_t i = from; i < all.size(); ++i) out << to_json(all[i]).dump() << '\n';
}

void KnowledgeBase::record(const KnowledgeEntry& entry) {
  if (!entry.valid())
    throw Error(ErrorKind::InvalidKnowledgeEntry,
                "delta_e " + std::to_string(entry.delta_e) + " contradicts outcome " +
                    std::string(to_string(entry.outcome)));
  std::unique_lock lock(mu_);
  entries_.push_back(entry);
}

std::vector<RankedChoice> KnowledgeBase::query(const Fingerprint& fp) const {
  std::vector<RankedChoice> ranked;
  {
    std::shared_lock lock(mu_);
    for (const auto& e : entries_) {
      if (e.fingerprint != fp) continue;
      auto it = std::ranges::find_if(ranked, [&](const RankedChoice& c) { return c.agent == e.agent && c.mode == e.mode; });
      if (it == ranked.end()) {
        ranked.push_back(RankedChoice{e.agent, e.mode});
        it = std::prev(ranked.end());
      }
      switch (e.outcome) {
        case RepairOutcome::Fixed: ++it->fixed; break;
        case RepairOutcome::Improved: ++it->improved; break;
        case RepairOutcome::Worsened: ++it->worsened; break;
      }
    }
  }
  std::ranges::sort(ranked, [](const RankedChoice& a, const RankedChoice& b) {
    if (a.fixed != b.fixed) return a.fixed > b.fixed;
    if (a.improved != b.improved) return a.improved > b.improved;
    if (a.worsened != b.worsened) return a.worsened < b.worsened;
    if (static_rank(a.agent) != static_rank(b.agent)) return static_rank(a.agent) < static_rank(b.agent);
    return a.mode == ThinkingMode::Fast && b.mode == ThinkingMode::Slow;
  });
  return ranked;
}

std::vector<KnowledgeEntry> KnowledgeBase::entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::vector<KnowledgeEntry> KnowledgeBase::matching(const Fingerprint& fp) const {
  std::shared_lock lock(mu_);
  std::vector<KnowledgeEntry> out;
  std::ranges::copy_if(entries_, std::back_inserter(out), [&](const KnowledgeEntry& e) { return e.fingerprint == fp; });
  return out;
}

std::size_t KnowledgeBase::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// FixAgent

std::string_view to_string(SelectionTier t) noexcept {
  switch (t) {
    case SelectionTier::Knowledge: return "knowledge-base";
    case SelectionTier::Provider: return "provider";
    case SelectionTier::Static: return "static";
  }
  return "?";
}

namespace {

using Choice = std::pair<AgentKind, ThinkingMode>;

struct KeywordPolicy {
  std::vector<std::string_view> patterns;
  std::vector<AgentKind> agents;
  std::optional<ThinkingMode> mode;
};

// Highest-effectiveness agent per case feature in the agent study.
const std::vector<KeywordPolicy>& keyword_policies() {
  static const std::vector<KeywordPolicy> table = {
      {{"size mismatch", "dangling"}, {AgentKind::Replace}, std::nullopt},
      {{"access violation", "retag write", "write access"}, {AgentKind::Assert}, std::nullopt},
      {{"data_race", "data race", "atomic"}, {AgentKind::Modify}, ThinkingMode::Slow},
  };
  return table;
}

ThinkingMode default_mode(std::size_t loc) {
  return loc < kSlowLocThreshold ? ThinkingMode::Fast : ThinkingMode::Slow;
}

ThinkingMode other(ThinkingMode m) {
  return m == ThinkingMode::Fast ? ThinkingMode::Slow : ThinkingMode::Fast;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

std::optional<AgentKind> parse_agent_reply(std::string_view reply) {
  std::string word;
  auto flush = [&]() -> std::optional<AgentKind> {
    auto a = parse_agent(word);
    word.clear();
    return a;
  };
  for (char c : reply) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += c;
    } else if (auto a = flush()) {
      return a;
    }
  }
  return flush();
}

std::string excerpt(const std::string& code) {
  constexpr std::size_t kMax = 4000;
  return code.size() <= kMax ? code : code.substr(0, kMax);
}

}  // namespace

std::vector<Choice> static_preferences(std::span<const std::string> keywords, std::size_t loc) {
  const ThinkingMode mode = default_mode(loc);
  std::vector<Choice> prefs;
  auto add = [&](AgentKind a, ThinkingMode m) {
    if (std::ranges::find(prefs, Choice{a, m}) == prefs.end()) prefs.emplace_back(a, m);
  };

  const KeywordPolicy* matched = nullptr;
  for (const auto& kw : keywords) {
    for (const auto& policy : keyword_policies()) {
      if (std::ranges::any_of(policy.patterns, [&](std::string_view p) { return contains_icase(kw, p); })) {
        matched = &policy;
        break;
      }
    }
    if (matched) break;
  }
  if (matched) {
    for (AgentKind a : matched->agents) add(a, matched->mode.value_or(mode));
  } else {
    add(AgentKind::Knowledge, mode);
    add(AgentKind::Modify, mode);
  }
  std::array<AgentKind, 4> order = kAllAgents;
  std::ranges::sort(order, {}, static_rank);
  for (AgentKind a : order) add(a, mode);
  for (AgentKind a : order) add(a, other(mode));
  return prefs;
}

Selection select_next(const SelectionInput& input, const KnowledgeBase& kb, GenerationProvider* provider,
                      std::mt19937_64& rng, const PromptLibrary& prompts) {
  if (is_terminal(input.current))
    throw Error(ErrorKind::TerminalState, "cannot select from terminal state " + std::string(to_string(input.current)));

  const Fingerprint fp = make_fingerprint(input.signals, input.dominant);
  const auto ranked = kb.query(fp);
  std::set<Choice> avoid;
  for (const auto& c : ranked)
    if (c.net_negative()) avoid.insert({c.agent, c.mode});

  auto finish = [&](AgentKind agent, ThinkingMode mode, SelectionTier tier) {
    if (input.force_slow) mode = ThinkingMode::Slow;  // a rejected candidate escalates every tier
    Selection s{state_for(agent), RepairAction{agent, mode, {input.keywords, input.history, excerpt(input.code)}}, tier};
    return s;
  };

  for (const auto& c : ranked)
    if (c.positive() && !c.net_negative()) return finish(c.agent, c.mode, SelectionTier::Knowledge);

  const ThinkingMode base_mode = input.force_slow ? ThinkingMode::Slow : default_mode(input.loc);

  if (provider != nullptr) {
    try {
      GenerationRequest req;
      req.prompt = render(prompts.get("select"), {{"code", input.code},
                                                  {"keywords", input.keywords.empty() ? "none" : join(input.keywords, ", ")},
                                                  {"history", input.history.empty() ? "none" : input.history}});
      req.temperature = input.temperature;
      req.step_budget = 1;
      req.seed = rng();
      req.purpose = "select";
      const auto reply = provider->complete(req);
      if (auto agent = parse_agent_reply(reply.text)) {
        for (ThinkingMode m : {base_mode, other(base_mode)})
          if (!avoid.contains({*agent, m})) return finish(*agent, m, SelectionTier::Provider);
      }
    } catch (const Error&) {
      // provider trouble falls through to the static policy
    }
  }

  auto prefs = static_preferences(input.keywords, input.loc);
  if (input.force_slow)
    for (auto& [a, m] : prefs) m = ThinkingMode::Slow;
  for (const auto& [a, m] : prefs)
    if (!avoid.contains({a, m})) return finish(a, m, SelectionTier::Static);
  return finish(prefs.front().first, prefs.front().second, SelectionTier::Static);
}

// ---------------------------------------------------------------------------
// Agents

std::optional<std::string> extract_code(std::string_view reply) {
  const auto fence = reply.find("```");
  std::string_view body;
  if (fence == std::string_view::npos) {
    body = reply;
  } else {
    const auto line_end = reply.find('\n', fence);
    if (line_end == std::string_view::npos) return std::nullopt;
    const auto close = reply.find("```", line_end + 1);
    if (close == std::string_view::npos) return std::nullopt;
    body = reply.substr(line_end + 1, close - line_end - 1);
  }
  // strip surrounding blank space but keep indentation of the first line
  while (!body.empty() && (body.back() == ' ' || body.back() == '\n' || body.back() == '\r' || body.back() == '\t'))
    body.remove_suffix(1);
  while (!body.empty() && (body.front() == '\n' || body.front() == '\r')) body.remove_prefix(1);
  if (trim(body).empty()) return std::nullopt;
  return std::string(body) + "\n";
}

AgentOutput apply_agent(const RepairAction& action, const std::string& code, GenerationProvider& provider,
                        double temperature, std::uint64_t seed, const PromptLibrary& prompts) {
  GenerationRequest req;
  req.prompt = render(prompts.get(PromptLibrary::repair_name(action.agent, action.mode)),
                      {{"code", code},
                       {"keywords", action.context.keywords.empty() ? "none" : join(action.context.keywords, ", ")},
                       {"history", action.context.history.empty() ? "none" : action.context.history}});
  req.temperature = temperature;
  req.step_budget = step_budget(action.mode);
  req.seed = seed;
  req.purpose = "repair:" + std::string(to_string(action.agent)) + "/" + std::string(to_string(action.mode));
  const auto reply = provider.complete(req);
  auto extracted = extract_code(reply.text);
  if (!extracted) throw Error(ErrorKind::DegenerateCandidate, "degenerate candidate");
  return AgentOutput{std::move(*extracted), reply.steps_used};
}

SourceSnapshot apply(const RepairAction& action, const SourceSnapshot& snapshot, GenerationProvider& provider,
                     double temperature, std::uint64_t seed, int step, const PromptLibrary& prompts) {
  auto out = apply_agent(action, snapshot.code, provider, temperature, seed, prompts);
  return SourceSnapshot::make(std::move(out.code), state_for(action.agent), action.mode, step);
}

}  // namespace akira

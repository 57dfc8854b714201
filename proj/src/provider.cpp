#include "akira/provider.hpp"

#include <algorithm>

#include "akira/error.hpp"
#include "akira/hash.hpp"
#include "akira/text.hpp"

namespace akira {

using nlohmann::json;

json to_json(const ProviderCallRecord& r) {
  json j{{"purpose", r.purpose},
         {"prompt_hash", r.prompt_hash},
         {"temperature", r.temperature},
         {"step_budget", r.step_budget},
         {"seed", r.seed},
         {"steps_used", r.steps_used},
         {"provider_id", r.provider_id},
         {"response", r.response}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

// ---------------------------------------------------------------------------
// GenerationProvider

GenerationResponse GenerationProvider::complete(const GenerationRequest& request) {
  if (trim(request.prompt).empty()) throw Error(ErrorKind::InvalidArgument, "empty prompt");
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0))
    throw Error(ErrorKind::InvalidArgument, "temperature must be in [0, 2]");
  if (request.step_budget < 1) throw Error(ErrorKind::InvalidArgument, "step budget must be >= 1");

  ProviderCallRecord record;
  record.purpose = request.purpose;
  record.prompt_hash = content_hash(request.prompt);
  record.temperature = request.temperature;
  record.step_budget = request.step_budget;
  record.seed = request.seed;
  record.provider_id = id();
  try {
    GenerationResponse response = do_complete(request);
    if (response.steps_used > request.step_budget)
      throw Error(ErrorKind::ProviderUnavailable, "provider exceeded its step budget");
    response.provider_id = record.provider_id;
    record.steps_used = response.steps_used;
    record.response = response.text;
    if (observer_) observer_(record);
    return response;
  } catch (const Error& e) {
    record.error = e.what();
    if (observer_) observer_(record);
    if (e.kind() == ErrorKind::ProviderUnavailable) throw;
    throw Error(ErrorKind::ProviderUnavailable, std::string("provider unavailable: ") + e.what());
  }
}

std::vector<std::string> stage_names(int step_budget) {
  if (step_budget <= 1) return {"single"};
  std::vector<std::string> names{"plan", "act"};
  for (int i = 2; i < step_budget; ++i) names.emplace_back("check");
  return names;
}

GenerationResponse GenerationProvider::chain(
    const GenerationRequest& request, const std::function<std::string(const std::string&)>& call) {
  const auto stages = stage_names(request.step_budget);
  const auto total = std::to_string(stages.size());
  std::string plan, last;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& stage = stages[i];
    const auto header = "Stage " + std::to_string(i + 1) + " of " + total + " (" + stage + ").\n";
    std::string prompt;
    if (stage == "single") {
      prompt = request.prompt;
    } else if (stage == "plan") {
      prompt = header +
               "Do not write code yet. Reason step by step and outline how to solve the task below.\n\n" +
               request.prompt;
    } else if (stage == "act") {
      prompt = header + request.prompt + "\n\nFollow this plan:\n" + plan;
    } else {
      prompt = header +
               "Review the candidate answer against the task. Correct any ownership, lifetime, "
               "aliasing or semantic problem and reply with the final answer in the format the task "
               "requests.\n\nTask:\n" +
               request.prompt + "\n\nCandidate answer:\n" + last;
    }
    std::string out = call(prompt);
    if (stage == "plan") {
      plan = std::move(out);
    } else if (stage == "check" && trim(out).empty()) {
      // keep the previous candidate
    } else {
      last = std::move(out);
    }
  }
  return GenerationResponse{last, static_cast<int>(stages.size()), id()};
}

// ---------------------------------------------------------------------------
// ScriptedProvider

ScriptedProvider::ScriptedProvider(ScriptedProvider&& other) noexcept
    : by_hash_(std::move(other.by_hash_)),
      rules_(std::move(other.rules_)),
      fallback_(std::move(other.fallback_)),
      fallback_cursor_(other.fallback_cursor_),
      log_(std::move(other.log_)) {}

ScriptedProvider ScriptedProvider::parse(std::string_view script_text) {
  json j;
  try {
    j = json::parse(script_text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, script_text.size());
    const auto line = 1 + std::count(script_text.begin(), script_text.begin() + upto, '\n');
    throw Error(ErrorKind::ParseError, "provider script line " + std::to_string(line) + ": " + e.what());
  }
  return from_json(j);
}

ScriptedProvider ScriptedProvider::from_json(const json& script) {
  if (!script.is_object()) throw Error(ErrorKind::ParseError, "provider script must be a JSON object");
  ScriptedProvider p;
  try {
    if (auto it = script.find("responses"); it != script.end())
      for (const auto& [hash, text] : it->items()) p.by_hash_[hash] = text.get<std::string>();
    if (auto it = script.find("rules"); it != script.end()) {
      for (const auto& r : *it) {
        Rule rule;
        const auto& c = r.at("contains");
        if (c.is_string())
          rule.contains.push_back(c.get<std::string>());
        else
          rule.contains = c.get<std::vector<std::string>>();
        if (r.contains("temperature_min")) rule.temperature_min = r.at("temperature_min").get<double>();
        if (r.contains("temperature_max")) rule.temperature_max = r.at("temperature_max").get<double>();
        rule.response = r.at("response").get<std::string>();
        p.rules_.push_back(std::move(rule));
      }
    }
    if (auto it = script.find("fallback"); it != script.end())
      p.fallback_ = it->get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("provider script: ") + e.what());
  }
  return p;
}

ScriptedProvider ScriptedProvider::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ParseError) throw;
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

json ScriptedProvider::to_json() const {
  std::lock_guard lock(mu_);
  json rules = json::array();
  for (const auto& r : rules_) {
    json jr{{"contains", r.contains}, {"response", r.response}};
    if (r.temperature_min) jr["temperature_min"] = *r.temperature_min;
    if (r.temperature_max) jr["temperature_max"] = *r.temperature_max;
    rules.push_back(std::move(jr));
  }
  return json{{"responses", by_hash_}, {"rules", rules}, {"fallback", fallback_}};
}

void ScriptedProvider::save(const std::filesystem::path& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

ScriptedProvider& ScriptedProvider::respond(const std::string& prompt, std::string text) {
  return respond_hash(content_hash(prompt), std::move(text));
}

ScriptedProvider& ScriptedProvider::respond_hash(std::string prompt_hash, std::string text) {
  std::lock_guard lock(mu_);
  by_hash_[std::move(prompt_hash)] = std::move(text);
  return *this;
}

ScriptedProvider& ScriptedProvider::add_rule(Rule rule) {
  std::lock_guard lock(mu_);
  rules_.push_back(std::move(rule));
  return *this;
}

ScriptedProvider& ScriptedProvider::add_fallback(std::string text) {
  std::lock_guard lock(mu_);
  fallback_.push_back(std::move(text));
  return *this;
}

std::vector<ScriptedProvider::CallLogEntry> ScriptedProvider::call_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

GenerationResponse ScriptedProvider::do_complete(const GenerationRequest& request) {
  std::lock_guard lock(mu_);
  const std::string hash = content_hash(request.prompt);
  const std::string* text = nullptr;
  if (auto it = by_hash_.find(hash); it != by_hash_.end()) text = &it->second;
  if (!text) {
    for (const auto& rule : rules_) {
      if (rule.temperature_min && request.temperature < *rule.temperature_min) continue;
      if (rule.temperature_max && request.temperature > *rule.temperature_max) continue;
      const bool all = std::ranges::all_of(rule.contains, [&](const std::string& needle) {
        return request.prompt.find(needle) != std::string::npos;
      });
      if (all) {
        text = &rule.response;
        break;
      }
    }
  }
  if (!text && fallback_cursor_ < fallback_.size()) text = &fallback_[fallback_cursor_++];
  if (!text) throw Error(ErrorKind::ProviderUnavailable, "provider unavailable: no scripted response");

  // Slow requests are logged as chained sub-calls so budgets stay observable.
  for (const auto& stage : stage_names(request.step_budget))
    log_.push_back({stage, hash, request.step_budget, request.seed});
  return GenerationResponse{*text, request.step_budget, id()};
}

}  // namespace akira

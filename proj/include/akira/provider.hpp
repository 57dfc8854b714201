#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace akira {

inline constexpr double kDefaultTemperature = 0.5;
inline constexpr double kLowTemperature = 0.2;
inline constexpr double kHighTemperature = 1.0;

struct GenerationRequest {
  std::string prompt;
  double temperature = kDefaultTemperature;  // [0, 2]
  int step_budget = 1;                      // 1 = fast, >= 3 = slow (plan -> act -> check)
  std::uint64_t seed = 0;
  std::string purpose;  // free-form tag for the call log ("repair", "select", ...)
};

struct GenerationResponse {
  std::string text;
  int steps_used = 0;
  std::string provider_id;
};

/// One complete() call as seen by observers. `error` is set when the call failed.
struct ProviderCallRecord {
  std::string purpose;
  std::string prompt_hash;
  double temperature = 0.0;
  int step_budget = 0;
  std::uint64_t seed = 0;
  int steps_used = 0;
  std::string provider_id;
  std::string response;
  std::string error;
};

nlohmann::json to_json(const ProviderCallRecord& r);

/// Uniform text-generation interface. complete() validates the request, delegates to
/// the backend, enforces steps_used <= step_budget and notifies the observer.
/// Failures surface as Error{ProviderUnavailable}.
class GenerationProvider {
 public:
  using Observer = std::function<void(const ProviderCallRecord&)>;

  virtual ~GenerationProvider() = default;

  GenerationResponse complete(const GenerationRequest& request);

  void set_observer(Observer observer) { observer_ = std::move(observer); }
  virtual std::string id() const = 0;

 protected:
  virtual GenerationResponse do_complete(const GenerationRequest& request) = 0;

  /// Runs the slow-thinking stage chain for hosted backends: "plan", "act", then
  /// "check" for every remaining budget step. A fast request is a single call.
  GenerationResponse chain(const GenerationRequest& request,
                           const std::function<std::string(const std::string& stage_prompt)>& call);

 private:
  Observer observer_;
};

/// Stage names used by chain() for a given budget.
std::vector<std::string> stage_names(int step_budget);

/// Deterministic scripted backend.
///
/// Script JSON:
///   { "responses": { "<prompt hash>": "text", ... },
///     "rules": [ { "contains": "s" | ["s1", "s2"], "temperature_min": 0.8,
///                  "temperature_max": 2.0, "response": "text" }, ... ],
///     "fallback": [ "text", ... ] }
/// Lookup order: exact prompt hash, first matching rule, next fallback entry.
/// Anything else is "provider unavailable". Responses never depend on the seed.
class ScriptedProvider final : public GenerationProvider {
 public:
  struct Rule {
    std::vector<std::string> contains;
    std::optional<double> temperature_min;
    std::optional<double> temperature_max;
    std::string response;
  };

  struct CallLogEntry {
    std::string stage;
    std::string prompt_hash;
    int step_budget = 0;
    std::uint64_t seed = 0;
  };

  ScriptedProvider() = default;
  ScriptedProvider(ScriptedProvider&& other) noexcept;

  /// Throws ParseError naming the line on malformed scripts.
  static ScriptedProvider parse(std::string_view script_text);
  static ScriptedProvider from_json(const nlohmann::json& script);
  static ScriptedProvider load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  ScriptedProvider& respond(const std::string& prompt, std::string text);
  ScriptedProvider& respond_hash(std::string prompt_hash, std::string text);
  ScriptedProvider& add_rule(Rule rule);
  ScriptedProvider& add_fallback(std::string text);

  std::string id() const override { return "mock"; }
  std::vector<CallLogEntry> call_log() const;

 protected:
  GenerationResponse do_complete(const GenerationRequest& request) override;

 private:
  std::map<std::string, std::string> by_hash_;
  std::vector<Rule> rules_;
  std::vector<std::string> fallback_;
  mutable std::mutex mu_;
  std::size_t fallback_cursor_ = 0;
  std::vector<CallLogEntry> log_;
};

struct HttpProviderConfig {
  std::string url;  // full chat-completions endpoint, http:// or https://
  std::string api_key;
  std::string model = "gpt-4";
  std::chrono::seconds timeout{120};

  /// AKIRA_PROVIDER_URL, AKIRA_PROVIDER_KEY, optional AKIRA_PROVIDER_MODEL.
  static std::optional<HttpProviderConfig> from_env();
};

/// OpenAI-style chat-completion adapter.
class HttpProvider final : public GenerationProvider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  std::string id() const override { return "http:" + config_.model; }

  /// Request body for one stage call; exposed for tests.
  nlohmann::json request_body(const std::string& prompt, double temperature, std::uint64_t seed) const;
  /// Extracts choices[0].message.content; throws ProviderUnavailable otherwise.
  static std::string parse_response_body(const std::string& body);

 protected:
  GenerationResponse do_complete(const GenerationRequest& request) override;

 private:
  std::string post(const std::string& body) const;

  HttpProviderConfig config_;
};

}  // namespace akira

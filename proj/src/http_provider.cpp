#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "akira/error.hpp"
#include "akira/provider.hpp"

namespace akira {

using nlohmann::json;

std::optional<HttpProviderConfig> HttpProviderConfig::from_env() {
  const char* url = std::getenv("AKIRA_PROVIDER_URL");
  if (!url || !*url) return std::nullopt;
  HttpProviderConfig cfg;
  cfg.url = url;
  if (const char* key = std::getenv("AKIRA_PROVIDER_KEY")) cfg.api_key = key;
  if (const char* model = std::getenv("AKIRA_PROVIDER_MODEL"); model && *model) cfg.model = model;
  return cfg;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw Error(ErrorKind::InvalidArgument, "provider url is empty");
}

json HttpProvider::request_body(const std::string& prompt, double temperature, std::uint64_t seed) const {
  return json{{"model", config_.model},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", temperature},
              {"seed", seed}};
}

std::string HttpProvider::parse_response_body(const std::string& body) {
  try {
    const auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProviderUnavailable, std::string("provider unavailable: bad response: ") + e.what());
  }
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::InvalidArgument, "provider url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string HttpProvider::post(const std::string& body) const {
  const auto [origin, path] = split_url(config_.url);
  httplib::Client client(origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res)
    throw Error(ErrorKind::ProviderUnavailable,
                "provider unavailable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorKind::ProviderUnavailable,
                "provider unavailable: HTTP " + std::to_string(res->status));
  return res->body;
}

GenerationResponse HttpProvider::do_complete(const GenerationRequest& request) {
  return chain(request, [&](const std::string& stage_prompt) {
    return parse_response_body(post(request_body(stage_prompt, request.temperature, request.seed).dump()));
  });
}

}  // namespace akira

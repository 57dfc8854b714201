#include "httplib.h"

#include <thread>

#include <gtest/gtest.h>

#include "akira/error.hpp"
#include "akira/hash.hpp"
#include "akira/process.hpp"
#include "akira/provider.hpp"

namespace akira {
namespace {

using nlohmann::json;

GenerationRequest request(std::string prompt, int budget = 1, std::uint64_t seed = 0, double temperature = 0.5) {
  GenerationRequest r;
  r.prompt = std::move(prompt);
  r.step_budget = budget;
  r.seed = seed;
  r.temperature = temperature;
  return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no akira::Error thrown";
  return ErrorKind::Io;
}

TEST(ScriptedProvider, HashLookupIsDeterministic) {
  ScriptedProvider p;
  p.respond("fix this", "X");
  for (std::uint64_t seed : {0u, 1u, 99u}) EXPECT_EQ(p.complete(request("fix this", 1, seed)).text, "X");
}

TEST(ScriptedProvider, IdenticalRequestsAcrossInstances) {
  const auto script = json::parse(R"({"rules": [{"contains": "fix", "response": "A"}], "fallback": ["F1", "F2"]})");
  for (int run = 0; run < 2; ++run) {
    auto p = ScriptedProvider::from_json(script);
    EXPECT_EQ(p.complete(request("please fix", 1, 42)).text, "A");
    EXPECT_EQ(p.complete(request("other", 1, 42)).text, "F1");
    EXPECT_EQ(p.complete(request("other", 1, 42)).text, "F2");
  }
}

TEST(ScriptedProvider, SlowBudgetLogsThreeChainedCalls) {
  ScriptedProvider p;
  p.respond("think", "T");
  const auto r = p.complete(request("think", 3, 5));
  EXPECT_EQ(r.steps_used, 3);
  EXPECT_EQ(r.provider_id, "mock");
  const auto log = p.call_log();
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].stage, "plan");
  EXPECT_EQ(log[1].stage, "act");
  EXPECT_EQ(log[2].stage, "check");
  for (const auto& e : log) EXPECT_EQ(e.prompt_hash, content_hash("think"));
}

TEST(ScriptedProvider, StageNames) {
  EXPECT_EQ(stage_names(1), (std::vector<std::string>{"single"}));
  EXPECT_EQ(stage_names(4), (std::vector<std::string>{"plan", "act", "check", "check"}));
}

TEST(ScriptedProvider, EmptyScriptIsUnavailable) {
  ScriptedProvider p;
  EXPECT_EQ(kind_of([&] { p.complete(request("anything")); }), ErrorKind::ProviderUnavailable);
}

TEST(ScriptedProvider, TwoKeysThirdPromptFails) {
  ScriptedProvider p;
  p.respond("one", "1").respond("two", "2");
  EXPECT_EQ(p.complete(request("one")).text, "1");
  EXPECT_EQ(p.complete(request("two")).text, "2");
  EXPECT_EQ(kind_of([&] { p.complete(request("three")); }), ErrorKind::ProviderUnavailable);
}

TEST(ScriptedProvider, FallbackExhausts) {
  ScriptedProvider p;
  p.add_fallback("only");
  EXPECT_EQ(p.complete(request("a")).text, "only");
  EXPECT_THROW(p.complete(request("a")), Error);
}

TEST(ScriptedProvider, TemperatureGatedRules) {
  ScriptedProvider p;
  p.add_rule({{"fix"}, std::nullopt, 0.3, "cold"});
  p.add_rule({{"fix"}, 0.8, std::nullopt, "hot"});
  p.add_rule({{"fix"}, std::nullopt, std::nullopt, "mild"});
  EXPECT_EQ(p.complete(request("fix", 1, 0, 0.2)).text, "cold");
  EXPECT_EQ(p.complete(request("fix", 1, 0, 1.0)).text, "hot");
  EXPECT_EQ(p.complete(request("fix", 1, 0, 0.5)).text, "mild");
}

TEST(ScriptedProvider, RejectsInvalidRequests) {
  ScriptedProvider p;
  p.add_fallback("x");
  EXPECT_EQ(kind_of([&] { p.complete(request("   ")); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { p.complete(request("a", 1, 0, 2.5)); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { p.complete(request("a", 0)); }), ErrorKind::InvalidArgument);
}

TEST(ScriptedProvider, MalformedScriptNamesLine) {
  try {
    ScriptedProvider::parse("{\n  \"responses\": {\n    \"h\": \"x\",\n  oops\n}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_EQ(kind_of([] { ScriptedProvider::parse("[1, 2]"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { ScriptedProvider::parse(R"({"responses": {"h": 3}})"); }), ErrorKind::ParseError);
}

TEST(ScriptedProvider, SaveLoadPreservesBehavior) {
  TempDir dir;
  ScriptedProvider p;
  const std::vector<std::string> prompts = {"alpha", "beta", "gamma", "delta"};
  p.respond("alpha", "A").respond("beta", "B");
  p.add_rule({{"gam"}, std::nullopt, 0.6, "G"});
  p.add_fallback("fb1");
  p.save(dir.path() / "script.json");
  auto q = ScriptedProvider::load(dir.path() / "script.json");
  EXPECT_EQ(q.to_json(), p.to_json());
  for (const auto& prompt : prompts) {
    std::string a, b;
    try {
      a = p.complete(request(prompt)).text;
    } catch (const Error& e) {
      a = std::string("error:") + e.what();
    }
    try {
      b = q.complete(request(prompt)).text;
    } catch (const Error& e) {
      b = std::string("error:") + e.what();
    }
    EXPECT_EQ(a, b) << prompt;
  }
}

TEST(ScriptedProvider, ObserverSeesSuccessesAndFailures) {
  ScriptedProvider p;
  p.respond("ok", "fine");
  std::vector<ProviderCallRecord> seen;
  p.set_observer([&](const ProviderCallRecord& r) { seen.push_back(r); });
  GenerationRequest r = request("ok", 3, 7);
  r.purpose = "repair";
  p.complete(r);
  EXPECT_THROW(p.complete(request("missing")), Error);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0].purpose, "repair");
  EXPECT_EQ(seen[0].steps_used, 3);
  EXPECT_EQ(seen[0].response, "fine");
  EXPECT_TRUE(seen[0].error.empty());
  EXPECT_FALSE(seen[1].error.empty());
  EXPECT_TRUE(to_json(seen[1]).contains("error"));
  EXPECT_FALSE(to_json(seen[0]).contains("error"));
}

TEST(ScriptedProvider, ConcurrentCallsAreSerializedInTheLog) {
  ScriptedProvider p;
  p.add_rule({{"x"}, std::nullopt, std::nullopt, "y"});
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) EXPECT_EQ(p.complete(request("x", 3)).text, "y");
    });
  threads.clear();
  EXPECT_EQ(p.call_log().size(), 8u * 50u * 3u);
}

// In-process chat-completions endpoint.
class LocalServer {
 public:
  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

json reply(const std::string& content) { return json{{"choices", json::array({{{"message", {{"content", content}}}}})}}; }

TEST(HttpProvider, RequestBodyShape) {
  HttpProvider p(HttpProviderConfig{"http://localhost/x", "", "m1"});
  const auto body = p.request_body("hi", 0.7, 3);
  EXPECT_EQ(body["model"], "m1");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "hi");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(body["seed"], 3);
}

TEST(HttpProvider, ParsesResponseBody) {
  EXPECT_EQ(HttpProvider::parse_response_body(reply("ok").dump()), "ok");
  EXPECT_EQ(kind_of([] { HttpProvider::parse_response_body("{}"); }), ErrorKind::ProviderUnavailable);
  EXPECT_EQ(kind_of([] { HttpProvider::parse_response_body("not json"); }), ErrorKind::ProviderUnavailable);
}

TEST(HttpProvider, FastCallAgainstLocalServer) {
  std::string auth;
  json received;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    received = json::parse(req.body);
    res.set_content(reply("fn main() {}").dump(), "application/json");
  });
  HttpProvider p(HttpProviderConfig{server.url(), "secret", "m"});
  const auto r = p.complete(request("repair this", 1, 11));
  EXPECT_EQ(r.text, "fn main() {}");
  EXPECT_EQ(r.steps_used, 1);
  EXPECT_EQ(r.provider_id, "http:m");
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(received["messages"][0]["content"], "repair this");
  EXPECT_EQ(received["seed"], 11);
}

TEST(HttpProvider, SlowCallChainsStages) {
  std::vector<std::string> prompts;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    prompts.push_back(json::parse(req.body)["messages"][0]["content"]);
    res.set_content(reply("answer " + std::to_string(prompts.size())).dump(), "application/json");
  });
  HttpProvider p(HttpProviderConfig{server.url(), "", "m"});
  const auto r = p.complete(request("the task", 3));
  ASSERT_EQ(prompts.size(), 3u);
  EXPECT_NE(prompts[0].find("(plan)"), std::string::npos);
  EXPECT_NE(prompts[1].find("answer 1"), std::string::npos);  // act sees the plan
  EXPECT_NE(prompts[2].find("answer 2"), std::string::npos);  // check sees the candidate
  EXPECT_EQ(r.text, "answer 3");
  EXPECT_EQ(r.steps_used, 3);
}

TEST(HttpProvider, ServerErrorIsUnavailable) {
  LocalServer server([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  HttpProvider p(HttpProviderConfig{server.url(), "", "m"});
  EXPECT_EQ(kind_of([&] { p.complete(request("x")); }), ErrorKind::ProviderUnavailable);
}

TEST(HttpProvider, UnreachableIsUnavailable) {
  HttpProviderConfig cfg{"http://127.0.0.1:1/v1/chat/completions", "", "m"};
  cfg.timeout = std::chrono::seconds(2);
  HttpProvider p(cfg);
  EXPECT_EQ(kind_of([&] { p.complete(request("x")); }), ErrorKind::ProviderUnavailable);
  EXPECT_THROW(HttpProvider(HttpProviderConfig{}), Error);
}

}  // namespace
}  // namespace akira

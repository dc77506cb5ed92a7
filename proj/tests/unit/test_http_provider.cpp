#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "decop/errors.hpp"
#include "decop/providers.hpp"
#include "support/test_support.hpp"

using namespace decop;
using namespace decop::test;
using nlohmann::json;

namespace {

/// Local OpenAI-style stub. Handlers run on the server thread; behavior is
/// driven by the requested model name.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      auto body = json::parse(req.body);
      std::string model = body.at("model").get<std::string>();
      if (req.get_header_value("Authorization") != "Bearer test-key") {
        res.status = 401;
        res.set_content("{\"error\":\"bad key\"}", "application/json");
        return;
      }
      if (model == "flaky" && hits_ <= 2) {
        res.status = 429;
        res.set_content("{\"error\":\"slow down\"}", "application/json");
        return;
      }
      if (model == "broken") {
        res.status = 500;
        res.set_content("{\"error\":\"boom\"}", "application/json");
        return;
      }
      json response;
      if (body.value("logprobs", false)) {
        json top = json::array();
        if (model == "missing-labels") {
          top.push_back({{"token", "A"}, {"logprob", -0.1}});
          top.push_back({{"token", "B"}, {"logprob", -2.0}});
          // C and D absent from the reported top tokens
          top.push_back({{"token", "the"}, {"logprob", -3.0}});
        } else {
          top.push_back({{"token", "A"}, {"logprob", -0.1}});
          top.push_back({{"token", " B"}, {"logprob", -3.0}});
          top.push_back({{"token", "C"}, {"logprob", -3.0}});
          top.push_back({{"token", "D"}, {"logprob", -3.0}});
          top.push_back({{"token", "A"}, {"logprob", -9.0}});  // dup ignored
        }
        response = {{"choices",
                     {{{"message", {{"role", "assistant"}, {"content", "A"}}},
                       {"logprobs", {{"content", {{{"token", "A"}, {"top_logprobs", top}}}}}}}}}};
      } else {
        response = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "B"}}}}}}};
      }
      res.set_content(response.dump(), "application/json");
    });
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      (void)req;
      json response = {{"choices",
                        {{{"text", "a b"},
                          {"logprobs",
                           {{"tokens", {"a", " b"}},
                            {"token_logprobs", {nullptr, -0.5}}}}}}}};
      res.set_content(response.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int hits() const { return hits_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
};

RemoteProviderConfig remote_config(const StubServer& server, const std::string& model) {
  RemoteProviderConfig config;
  config.base_url = server.url();
  config.model = model;
  config.api_key_env = "DECOP_TEST_KEY";
  config.requests_per_minute = 100000;
  config.max_attempts = 3;
  config.backoff_initial_ms = 1;
  config.supports_token_logprobs = true;
  return config;
}

struct KeyGuard {
  explicit KeyGuard(const char* value) { setenv("DECOP_TEST_KEY", value, 1); }
  ~KeyGuard() { unsetenv("DECOP_TEST_KEY"); }
};

}  // namespace

TEST_CASE("remote provider completes a chat request") {
  KeyGuard key("test-key");
  StubServer server;
  OpenAICompatProvider provider(remote_config(server, "plain"));
  CompletionRequest request;
  request.system = "be brief";
  request.user = "answer";
  CHECK(provider.complete(request) == "B");
  CHECK(server.hits() == 1);
}

TEST_CASE("remote provider retries 429 with backoff then succeeds") {
  KeyGuard key("test-key");
  StubServer server;
  OpenAICompatProvider provider(remote_config(server, "flaky"));
  CompletionRequest request;
  request.user = "answer";
  CHECK(provider.complete(request) == "B");
  CHECK(server.hits() == 3);  // 429, 429, 200
}

TEST_CASE("persistent 5xx exhausts attempts with TransportError") {
  KeyGuard key("test-key");
  StubServer server;
  OpenAICompatProvider provider(remote_config(server, "broken"));
  CompletionRequest request;
  request.user = "answer";
  CHECK_THROWS_AS(provider.complete(request), TransportError);
  CHECK(server.hits() == 3);
}

TEST_CASE("auth failures are not retried") {
  KeyGuard key("wrong-key");
  StubServer server;
  OpenAICompatProvider provider(remote_config(server, "plain"));
  CompletionRequest request;
  request.user = "answer";
  CHECK_THROWS_AS(provider.complete(request), AuthError);
  CHECK(server.hits() == 1);
}

TEST_CASE("missing credentials fail before any network call") {
  StubServer server;
  CHECK_THROWS_AS(OpenAICompatProvider(remote_config(server, "plain")), AuthError);
  CHECK(server.hits() == 0);
}

TEST_CASE("label_probs renormalizes top-token logprobs, tolerating leading spaces") {
  KeyGuard key("test-key");
  StubServer server;
  OpenAICompatProvider provider(remote_config(server, "plain"));
  CompletionRequest request;
  request.user = "question";
  auto probs = provider.label_probs(request);
  CHECK(probs[0] == doctest::Approx(0.8583177763420207).epsilon(1e-9));
  CHECK(probs[1] == doctest::Approx(0.04722740788599313).epsilon(1e-9));
}

TEST_CASE("label_probs surfaces MissingLogprobs instead of guessing") {
  KeyGuard key("test-key");
  StubServer server;
  OpenAICompatProvider provider(remote_config(server, "missing-labels"));
  CompletionRequest request;
  request.user = "question";
  CHECK_THROWS_AS(provider.label_probs(request), MissingLogprobs);
}

TEST_CASE("token_logprobs parses the echo endpoint and skips the null head") {
  KeyGuard key("test-key");
  StubServer server;
  OpenAICompatProvider provider(remote_config(server, "plain"));
  auto tokens = provider.token_logprobs("a b");
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].token == " b");
  CHECK(tokens[0].logprob == doctest::Approx(-0.5));
}

TEST_CASE("cached remote provider goes to the network once") {
  KeyGuard key("test-key");
  StubServer server;
  TempDir dir("http_cache");
  auto inner = std::make_shared<OpenAICompatProvider>(remote_config(server, "plain"));
  auto cache = std::make_shared<ResponseCache>(dir.str());
  CachedProvider provider(inner, cache);
  CompletionRequest request;
  request.user = "answer";
  CHECK(provider.complete(request) == "B");
  CHECK(provider.complete(request) == "B");
  CHECK(server.hits() == 1);
}

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "decop/errors.hpp"
#include "decop/providers.hpp"

namespace decop {

using nlohmann::json;

OpenAICompatProvider::OpenAICompatProvider(RemoteProviderConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_minute) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key)
    throw AuthError("environment variable " + config_.api_key_env + " is not set");
  api_key_ = key;
}

ProviderCapabilities OpenAICompatProvider::capabilities() const {
  return {true, config_.supports_label_probs, config_.supports_token_logprobs};
}

std::string OpenAICompatProvider::post_json(const std::string& path, const std::string& body) {
  int attempt = 0;
  int delay_ms = config_.backoff_initial_ms;
  for (;;) {
    ++attempt;
    limiter_.acquire();
    // httplib clients are not safe to share across threads; one per request.
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    client.set_default_headers({{"Authorization", "Bearer " + api_key_}});
    auto result = client.Post((config_.path_prefix + path).c_str(), body, "application/json");

    std::string failure;
    if (!result) {
      failure = "transport: " + httplib::to_string(result.error());
    } else if (result->status == 200) {
      return result->body;
    } else if (result->status == 401 || result->status == 403) {
      throw AuthError("authentication rejected (HTTP " + std::to_string(result->status) + ")");
    } else if (result->status == 429) {
      failure = "rate limited (HTTP 429)";
    } else if (result->status >= 400 && result->status < 500) {
      throw TransportError("HTTP " + std::to_string(result->status) + ": " + result->body);
    } else {
      failure = "HTTP " + std::to_string(result->status);
    }

    if (attempt >= config_.max_attempts) {
      if (failure.rfind("rate limited", 0) == 0)
        throw RateLimited(failure + " after " + std::to_string(attempt) + " attempts");
      throw TransportError(failure + " after " + std::to_string(attempt) + " attempts");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    delay_ms = std::min(delay_ms * 2, config_.backoff_max_ms);
  }
}

namespace {

json chat_body(const RemoteProviderConfig& config, const CompletionRequest& request) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  json body;
  body["model"] = config.model;
  body["messages"] = messages;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body;
}

}  // namespace

std::string OpenAICompatProvider::complete(const CompletionRequest& request) {
  auto body = chat_body(config_, request);
  json response = json::parse(post_json("/chat/completions", body.dump()));
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion response: ") + e.what());
  }
}

std::array<double, 4> OpenAICompatProvider::label_probs(const CompletionRequest& request) {
  if (!config_.supports_label_probs)
    throw Unsupported(config_.model + " is configured without label probabilities");
  auto body = chat_body(config_, request);
  body["max_tokens"] = 1;
  body["logprobs"] = true;
  body["top_logprobs"] = config_.top_logprobs;
  json response = json::parse(post_json("/chat/completions", body.dump()));

  std::array<double, 4> raw{};
  std::array<bool, 4> found{};
  try {
    const auto& top = response.at("choices").at(0).at("logprobs").at("content").at(0).at("top_logprobs");
    for (const auto& entry : top) {
      std::string token = entry.at("token").get<std::string>();
      // trim whitespace around the candidate token
      while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front())))
        token.erase(token.begin());
      while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.pop_back();
      if (token.size() != 1 || token[0] < 'A' || token[0] > 'D') continue;
      int idx = token[0] - 'A';
      if (!found[static_cast<std::size_t>(idx)]) {
        found[static_cast<std::size_t>(idx)] = true;
        raw[static_cast<std::size_t>(idx)] = entry.at("logprob").get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed logprobs response: ") + e.what());
  }
  for (int i = 0; i < 4; ++i) {
    if (!found[static_cast<std::size_t>(i)])
      throw MissingLogprobs(std::string("label ") + static_cast<char>('A' + i) +
                            " absent from top token logprobs");
  }
  return renormalize_label_logprobs(raw);
}

std::vector<TokenLogprob> OpenAICompatProvider::token_logprobs(const std::string& text) {
  if (!config_.supports_token_logprobs)
    throw Unsupported(config_.model + " is configured without token log-probabilities");
  json body;
  body["model"] = config_.model;
  body["prompt"] = text;
  body["max_tokens"] = 0;
  body["echo"] = true;
  body["logprobs"] = 0;
  json response = json::parse(post_json("/completions", body.dump()));
  std::vector<TokenLogprob> out;
  try {
    const auto& lp = response.at("choices").at(0).at("logprobs");
    const auto& tokens = lp.at("tokens");
    const auto& values = lp.at("token_logprobs");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (values.at(i).is_null()) continue;  // first echoed token has no logprob
      out.push_back({tokens.at(i).get<std::string>(), values.at(i).get<double>()});
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed echo logprobs response: ") + e.what());
  }
  return out;
}

}  // namespace decop

#include "decop/providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "decop/errors.hpp"
#include "decop/rng.hpp"
#include "decop/sha256.hpp"

namespace decop {

using nlohmann::json;

std::array<double, 4> Provider::label_probs(const CompletionRequest&) {
  throw Unsupported(name() + " does not expose label probabilities");
}

std::vector<TokenLogprob> Provider::token_logprobs(const std::string&) {
  throw Unsupported(name() + " does not expose token log-probabilities");
}

std::array<double, 4> renormalize_label_logprobs(const std::array<double, 4>& logprobs) {
  std::array<double, 4> p{};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(logprobs[static_cast<std::size_t>(i)]);
    total += p[static_cast<std::size_t>(i)];
  }
  for (auto& v : p) v /= total;
  return p;
}

// ---------------------------------------------------------------------------
// Simulated model
// ---------------------------------------------------------------------------

double SimulatedModelConfig::memorization_for(const std::string& doc_id) const {
  auto it = doc_memorization.find(doc_id);
  if (it != doc_memorization.end()) return it->second;
  if (default_memorization) return *default_memorization;
  throw Error("simulated model has no memorization rate for document " + doc_id);
}

std::array<double, 4> SimulatedModelConfig::normalized_bias() const {
  double total = 0.0;
  for (double b : position_bias) {
    if (b < 0.0) throw Error("position bias components must be non-negative");
    total += b;
  }
  if (total <= 0.0) throw Error("position bias must have positive mass");
  std::array<double, 4> out = position_bias;
  for (auto& b : out) b /= total;
  return out;
}

SimulatedAnswer simulate_answer(const SimulatedModelConfig& config, const TrialRef& trial) {
  const double m = config.memorization_for(trial.doc_id);
  const auto bias = config.normalized_bias();
  const int correct = trial.correct_label - 'A';

  SimulatedAnswer answer;
  for (int i = 0; i < 4; ++i)
    answer.label_probs[static_cast<std::size_t>(i)] =
        m * (i == correct ? 1.0 : 0.0) + (1.0 - m) * bias[static_cast<std::size_t>(i)];

  double u = hash_unit(config.seed, trial.trial_id, 1);
  if (u < m) {
    answer.label = trial.correct_label;
    return answer;
  }
  double v = hash_unit(config.seed, trial.trial_id, 2);
  double cum = 0.0;
  int pick = 3;
  for (int i = 0; i < 4; ++i) {
    cum += bias[static_cast<std::size_t>(i)];
    if (v < cum) {
      pick = i;
      break;
    }
  }
  answer.label = static_cast<char>('A' + pick);
  return answer;
}

SimulatedProvider::SimulatedProvider(SimulatedModelConfig config, std::string model_name)
    : config_(std::move(config)), model_name_(std::move(model_name)) {
  config_.position_bias = config_.normalized_bias();
}

std::string SimulatedProvider::complete(const CompletionRequest& request) {
  if (request.trial) return std::string(1, simulate_answer(config_, *request.trial).label);
  // No trial context: an arbitrary, content-free completion. Prefix probing
  // and cloze tasks against the simulated model simply fail to match, which
  // mirrors how those baselines behave on unseen text.
  return "[simulated completion]";
}

std::array<double, 4> SimulatedProvider::label_probs(const CompletionRequest& request) {
  if (!request.trial) throw MissingLogprobs("simulated label probabilities need trial context");
  return simulate_answer(config_, *request.trial).label_probs;
}

std::vector<TokenLogprob> SimulatedProvider::token_logprobs(const std::string& text) {
  auto scripted = config_.scripted_token_logprobs.find(text);
  if (scripted != config_.scripted_token_logprobs.end()) return scripted->second;

  std::vector<TokenLogprob> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    out.push_back({text.substr(start, i - start), config_.token_logprob});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute)
    : capacity_(std::max(1.0, requests_per_minute)),
      tokens_(capacity_),
      per_second_(requests_per_minute / 60.0),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::refill_locked() {
  auto now = std::chrono::steady_clock::now();
  double elapsed = std::chrono::duration<double>(now - last_).count();
  last_ = now;
  tokens_ = std::min(capacity_, tokens_ + elapsed * per_second_);
}

bool RateLimiter::try_acquire() {
  std::lock_guard lock(mutex_);
  refill_locked();
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void RateLimiter::acquire() {
  for (;;) {
    double wait_s = 0.0;
    {
      std::lock_guard lock(mutex_);
      refill_locked();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_s = (1.0 - tokens_) / per_second_;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(std::min(wait_s, 1.0)));
  }
}

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::string directory) : dir_(std::move(directory)) {
  std::filesystem::create_directories(dir_);
}

std::string ResponseCache::request_key(const std::string& provider, const std::string& model,
                                       const std::string& kind, const CompletionRequest& request) {
  json j;
  j["provider"] = provider;
  j["model"] = model;
  j["kind"] = kind;
  j["system"] = request.system;
  j["user"] = request.user;
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  if (request.trial) {
    j["trial_id"] = request.trial->trial_id;
    j["doc_id"] = request.trial->doc_id;
    j["correct_label"] = std::string(1, request.trial->correct_label);
  }
  return sha256_hex(j.dump());
}

std::string ResponseCache::text_key(const std::string& provider, const std::string& model,
                                    const std::string& kind, const std::string& text) {
  json j;
  j["provider"] = provider;
  j["model"] = model;
  j["kind"] = kind;
  j["text"] = text;
  return sha256_hex(j.dump());
}

std::optional<std::string> ResponseCache::get(const std::string& key) {
  std::lock_guard lock(mutex_);
  auto path = std::filesystem::path(dir_) / (key + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ++stats_.misses;
    return std::nullopt;
  }
  json record;
  try {
    in >> record;
    auto response = record.at("response").get<std::string>();
    ++stats_.hits;
    return response;
  } catch (const json::exception&) {
    ++stats_.misses;  // unreadable record; treat as miss and overwrite later
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const std::string& provider,
                        const std::string& model, const std::string& request_json,
                        const std::string& response_json) {
  std::lock_guard lock(mutex_);
  json record;
  record["request_hash"] = key;
  record["provider"] = provider;
  record["model"] = model;
  record["request"] = json::parse(request_json);
  record["response"] = response_json;
  record["timestamp"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  auto path = std::filesystem::path(dir_) / (key + ".json");
  auto tmp = std::filesystem::path(dir_) / (key + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << record.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::string request_payload_json(const CompletionRequest& request, const std::string& kind) {
  json j;
  j["kind"] = kind;
  j["system"] = request.system;
  j["user"] = request.user;
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  if (request.trial) j["trial_id"] = request.trial->trial_id;
  return j.dump();
}

}  // namespace

CachedProvider::CachedProvider(std::shared_ptr<Provider> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedProvider::complete(const CompletionRequest& request) {
  auto key = ResponseCache::request_key(name(), model(), "complete", request);
  if (auto hit = cache_->get(key)) return json::parse(*hit).at("text").get<std::string>();
  auto text = inner_->complete(request);
  json resp;
  resp["text"] = text;
  cache_->put(key, name(), model(), request_payload_json(request, "complete"), resp.dump());
  return text;
}

std::array<double, 4> CachedProvider::label_probs(const CompletionRequest& request) {
  auto key = ResponseCache::request_key(name(), model(), "label_probs", request);
  if (auto hit = cache_->get(key)) {
    auto probs = json::parse(*hit).at("label_probs").get<std::vector<double>>();
    return {probs[0], probs[1], probs[2], probs[3]};
  }
  auto probs = inner_->label_probs(request);
  json resp;
  resp["label_probs"] = probs;
  cache_->put(key, name(), model(), request_payload_json(request, "label_probs"), resp.dump());
  return probs;
}

std::vector<TokenLogprob> CachedProvider::token_logprobs(const std::string& text) {
  auto key = ResponseCache::text_key(name(), model(), "token_logprobs", text);
  if (auto hit = cache_->get(key)) {
    json record = json::parse(*hit);
    std::vector<TokenLogprob> out;
    for (const auto& t : record.at("tokens")) {
      out.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
    }
    return out;
  }
  auto tokens = inner_->token_logprobs(text);
  json arr = json::array();
  for (const auto& t : tokens) arr.push_back({{"token", t.token}, {"logprob", t.logprob}});
  json resp;
  resp["tokens"] = arr;
  json req;
  req["kind"] = "token_logprobs";
  req["text"] = text;
  cache_->put(key, name(), model(), req.dump(), resp.dump());
  return tokens;
}

}  // namespace decop

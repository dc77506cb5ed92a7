#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "decop/types.hpp"

namespace decop {

struct ProviderCapabilities {
  bool chat = false;
  bool label_probs = false;     // probabilities for candidate answer labels
  bool token_logprobs = false;  // per-token log-probabilities for a given text
};

/// Identifies the probe trial a request belongs to. Real providers ignore it
/// (it never reaches the wire); the simulated provider keys its deterministic
/// answer on it, and the cache includes it in the request hash.
struct TrialRef {
  std::string trial_id;
  std::string doc_id;
  char correct_label = 'A';
};

struct CompletionRequest {
  std::string system;  // empty => single user message
  std::string user;
  double temperature = 0.0;
  int max_tokens = 16;
  std::optional<TrialRef> trial;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  virtual std::string model() const = 0;
  virtual ProviderCapabilities capabilities() const = 0;

  virtual std::string complete(const CompletionRequest& request) = 0;

  /// Probability of each of A/B/C/D as the next answer token, renormalized to
  /// sum to 1. Throws MissingLogprobs when any label is absent from the
  /// provider's reported top tokens, Unsupported when the capability is off.
  virtual std::array<double, 4> label_probs(const CompletionRequest& request);

  /// Per-token log-probabilities under the provider's own tokenization; the
  /// tokens concatenate to the input text. Throws Unsupported by default.
  virtual std::vector<TokenLogprob> token_logprobs(const std::string& text);
};

// ---------------------------------------------------------------------------
// Simulated model
// ---------------------------------------------------------------------------

/// Deterministic test oracle: a model that answers the correct option with
/// per-document probability m and otherwise samples a position from a fixed
/// position bias. Used by the simulate command and the test suites.
struct SimulatedModelConfig {
  std::map<std::string, double> doc_memorization;  // doc_id -> m
  std::optional<double> default_memorization;
  std::array<double, 4> position_bias = {0.25, 0.25, 0.25, 0.25};
  std::uint64_t seed = 0;
  double token_logprob = -0.6931471805599453;  // -ln 2 per whitespace token
  std::map<std::string, std::vector<TokenLogprob>> scripted_token_logprobs;

  double memorization_for(const std::string& doc_id) const;
  /// Bias normalized to sum to 1; throws on a non-positive total.
  std::array<double, 4> normalized_bias() const;
};

struct SimulatedAnswer {
  char label = 'A';
  std::array<double, 4> label_probs = {0.25, 0.25, 0.25, 0.25};
};

/// Pure function of (config.seed, trial_id, correct_label): with probability m
/// returns the correct label, else a bias-sampled position. label_probs is the
/// exact mixture m*onehot(correct) + (1-m)*bias.
SimulatedAnswer simulate_answer(const SimulatedModelConfig& config, const TrialRef& trial);

class SimulatedProvider : public Provider {
 public:
  explicit SimulatedProvider(SimulatedModelConfig config, std::string model_name = "simulated");

  std::string name() const override { return "simulated"; }
  std::string model() const override { return model_name_; }
  ProviderCapabilities capabilities() const override { return {true, true, true}; }

  std::string complete(const CompletionRequest& request) override;
  std::array<double, 4> label_probs(const CompletionRequest& request) override;
  std::vector<TokenLogprob> token_logprobs(const std::string& text) override;

  const SimulatedModelConfig& config() const { return config_; }

 private:
  SimulatedModelConfig config_;
  std::string model_name_;
};

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

/// Token bucket. acquire() blocks until a token is available; try_acquire()
/// never blocks. Thread safe.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);

  void acquire();
  bool try_acquire();

 private:
  void refill_locked();

  std::mutex mutex_;
  double capacity_;
  double tokens_;
  double per_second_;
  std::chrono::steady_clock::time_point last_;
};

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
};

/// Content-addressed response store: one JSON record per request hash, written
/// atomically, human-inspectable. Key = SHA-256 of (provider, model, kind,
/// request payload).
class ResponseCache {
 public:
  explicit ResponseCache(std::string directory);

  std::optional<std::string> get(const std::string& key);
  void put(const std::string& key, const std::string& provider, const std::string& model,
           const std::string& request_json, const std::string& response_json);

  const CacheStats& stats() const { return stats_; }

  static std::string request_key(const std::string& provider, const std::string& model,
                                 const std::string& kind, const CompletionRequest& request);
  static std::string text_key(const std::string& provider, const std::string& model,
                              const std::string& kind, const std::string& text);

 private:
  std::string dir_;
  std::mutex mutex_;
  CacheStats stats_;
};

/// Decorator: consults the cache before delegating; writes through on miss.
class CachedProvider : public Provider {
 public:
  CachedProvider(std::shared_ptr<Provider> inner, std::shared_ptr<ResponseCache> cache);

  std::string name() const override { return inner_->name(); }
  std::string model() const override { return inner_->model(); }
  ProviderCapabilities capabilities() const override { return inner_->capabilities(); }

  std::string complete(const CompletionRequest& request) override;
  std::array<double, 4> label_probs(const CompletionRequest& request) override;
  std::vector<TokenLogprob> token_logprobs(const std::string& text) override;

  const CacheStats& stats() const { return cache_->stats(); }

 private:
  std::shared_ptr<Provider> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

// ---------------------------------------------------------------------------
// Remote OpenAI-compatible provider
// ---------------------------------------------------------------------------

struct RemoteProviderConfig {
  std::string base_url = "https://api.openai.com";
  std::string path_prefix = "/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  double requests_per_minute = 60.0;
  int max_attempts = 5;        // 429/transport retries
  int backoff_initial_ms = 500;
  int backoff_max_ms = 30000;
  int top_logprobs = 20;       // for label_probs requests
  bool supports_label_probs = true;
  bool supports_token_logprobs = false;  // legacy completions echo endpoint
};

class OpenAICompatProvider : public Provider {
 public:
  explicit OpenAICompatProvider(RemoteProviderConfig config);

  std::string name() const override { return "openai_compat"; }
  std::string model() const override { return config_.model; }
  ProviderCapabilities capabilities() const override;

  std::string complete(const CompletionRequest& request) override;
  std::array<double, 4> label_probs(const CompletionRequest& request) override;
  std::vector<TokenLogprob> token_logprobs(const std::string& text) override;

 private:
  std::string post_json(const std::string& path, const std::string& body);

  RemoteProviderConfig config_;
  std::string api_key_;
  RateLimiter limiter_;
};

/// Renormalizes raw label logprobs to probabilities: exp(l) / sum(exp(l)).
std::array<double, 4> renormalize_label_logprobs(const std::array<double, 4>& logprobs);

}  // namespace decop

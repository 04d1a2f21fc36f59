#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparqlgen/cache.hpp"
#include "sparqlgen/embedding.hpp"
#include "sparqlgen/prompting.hpp"

namespace sparqlgen {

// An OpenAI-compatible endpoint serving chat completions and/or embeddings.
struct LlmEndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model_name;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::chrono::duration<double> timeout{60.0};
  int max_retries = 3;
  std::optional<std::string> api_key;
  // Attempt i waits backoff_base * 2^i, scaled by a jitter factor in [0.5, 1.5).
  std::chrono::duration<double> backoff_base{0.5};
};

// Overrides LlmEndpointConfig::api_key when set.
inline constexpr const char* kApiKeyEnv = "SPARQLGEN_API_KEY";

// Throws ConfigError naming the first invalid field.
void validate(const LlmEndpointConfig& cfg);

struct GenerationRecord {
  PromptInstance prompt;
  std::string raw_output;  // exactly as returned by the endpoint
  std::string model_name;
  double latency_seconds = 0.0;  // of the original call, also on cache hits
  bool cache_hit = false;
};

// Digest of (model_name, temperature, prompt bytes, run_salt).
std::string generation_cache_key(const LlmEndpointConfig& cfg, const PromptInstance& prompt,
                                 std::string_view run_salt);
// Digest of (model_name, text).
std::string embedding_cache_key(const LlmEndpointConfig& cfg, std::string_view text);

// Chat and embedding client with retries, a bounded number of in-flight
// requests and a content-addressed response cache. Thread-safe.
class LlmClient {
 public:
  // `cache` may be null. In offline mode every call must be served from the
  // cache; a miss throws CacheMiss.
  LlmClient(LlmEndpointConfig cfg, std::shared_ptr<const ResponseCache> cache,
            size_t max_in_flight = 4, bool offline = false);

  GenerationRecord generate(const PromptInstance& prompt, std::string_view run_salt);

  // Vectors aligned with `texts`, all of one length. Cached per text.
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts);

  const LlmEndpointConfig& config() const { return cfg_; }
  size_t network_calls() const { return network_calls_.load(); }

 private:
  std::string post_with_retries(const std::string& path, const std::string& body);

  LlmEndpointConfig cfg_;
  std::shared_ptr<const ResponseCache> cache_;
  std::counting_semaphore<1024> in_flight_;
  bool offline_;
  std::atomic<size_t> network_calls_{0};
};

// Free-function form of LlmClient::generate for one-off calls.
GenerationRecord generate(const PromptInstance& prompt, const LlmEndpointConfig& cfg,
                          std::shared_ptr<const ResponseCache> cache, std::string_view run_salt);

// EmbeddingProvider backed by an embeddings endpoint.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  explicit HttpEmbedder(std::shared_ptr<LlmClient> client) : client_(std::move(client)) {}
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    return client_->embed(texts);
  }
  std::string name() const override { return "http:" + client_->config().model_name; }

 private:
  std::shared_ptr<LlmClient> client_;
};

}  // namespace sparqlgen

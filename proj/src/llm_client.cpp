#include "sparqlgen/llm_client.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <thread>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/http.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

using nlohmann::json;

void validate(const LlmEndpointConfig& cfg) {
  if (cfg.base_url.find("://") == std::string::npos) {
    throw ConfigError("endpoint base_url must be an absolute URL: '" + cfg.base_url + "'");
  }
  if (cfg.model_name.empty()) throw ConfigError("endpoint model name is empty");
  if (!(cfg.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (cfg.max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (!(cfg.timeout.count() > 0.0)) throw ConfigError("timeout must be > 0");
  if (cfg.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double jitter() {
  thread_local std::mt19937 rng{std::random_device{}()};
  return std::uniform_real_distribution<double>(0.5, 1.5)(rng);
}

std::string join_path(const std::string& base, const std::string& path) {
  if (!base.empty() && base.back() == '/') return base + path.substr(1);
  return base + path;
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

std::string generation_cache_key(const LlmEndpointConfig& cfg, const PromptInstance& prompt,
                                 std::string_view run_salt) {
  const json fields = {"chat", cfg.model_name, format_real(cfg.temperature), prompt.system_text,
                       prompt.user_text, std::string(run_salt)};
  return sha256_hex(fields.dump());
}

std::string embedding_cache_key(const LlmEndpointConfig& cfg, std::string_view text) {
  const json fields = {"embedding", cfg.model_name, std::string(text)};
  return sha256_hex(fields.dump());
}

LlmClient::LlmClient(LlmEndpointConfig cfg, std::shared_ptr<const ResponseCache> cache,
                     size_t max_in_flight, bool offline)
    : cfg_(std::move(cfg)),
      cache_(std::move(cache)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<size_t>(max_in_flight, 1, 1024))),
      offline_(offline) {
  validate(cfg_);
  if (const char* key = std::getenv(kApiKeyEnv); key && *key) cfg_.api_key = key;
}

std::string LlmClient::post_with_retries(const std::string& path, const std::string& body) {
  if (offline_) throw CacheMiss("offline replay: no cached response for a request to " + path);
  HttpRequest req;
  req.url = join_path(cfg_.base_url, path);
  req.body = body;
  req.content_type = "application/json";
  req.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(cfg_.timeout);
  if (cfg_.api_key) req.headers.emplace_back("Authorization", "Bearer " + *cfg_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double wait = cfg_.backoff_base.count() * std::pow(2.0, attempt - 1) * jitter();
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    try {
      SemaphoreGuard guard(in_flight_);
      ++network_calls_;
      HttpResponse res = http_post(req);
      if (res.status >= 200 && res.status < 300) return std::move(res.body);
      if (res.status < 500) throw EndpointError(res.status, res.body);
      last_error = "HTTP " + std::to_string(res.status) + ": " + res.body;
    } catch (const TransportError& e) {
      last_error = e.what();
    } catch (const TimeoutError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("giving up on " + req.url + " after " +
                       std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
}

GenerationRecord LlmClient::generate(const PromptInstance& prompt, std::string_view run_salt) {
  const std::string key = generation_cache_key(cfg_, prompt, run_salt);
  GenerationRecord rec;
  rec.prompt = prompt;
  rec.model_name = cfg_.model_name;
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      rec.raw_output = hit->at("response").at("raw_output").get<std::string>();
      rec.latency_seconds = hit->at("response").value("latency_seconds", 0.0);
      rec.cache_hit = true;
      return rec;
    }
  }

  json messages = json::array();
  if (!prompt.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", prompt.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", prompt.user_text}});
  const json request = {{"model", cfg_.model_name},
                        {"messages", messages},
                        {"temperature", cfg_.temperature},
                        {"max_tokens", cfg_.max_tokens}};

  const auto start = std::chrono::steady_clock::now();
  const std::string body = post_with_retries("/chat/completions", request.dump());
  rec.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json response;
  try {
    response = json::parse(body);
  } catch (const json::parse_error&) {
    throw EmptyCompletion("chat completion response is not JSON");
  }
  const json* content = nullptr;
  if (response.contains("choices") && response["choices"].is_array() && !response["choices"].empty()) {
    const json& choice = response["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
  }
  if (!content || !content->is_string() || content->get<std::string>().empty()) {
    throw EmptyCompletion("endpoint returned no completion text");
  }
  rec.raw_output = content->get<std::string>();

  if (cache_) {
    cache_->put(key, json{{"kind", "chat"},
                          {"run_salt", std::string(run_salt)},
                          {"request", request},
                          {"response", {{"raw_output", rec.raw_output},
                                        {"latency_seconds", rec.latency_seconds}}}});
  }
  return rec;
}

std::vector<EmbeddingVector> LlmClient::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw PreconditionError("embed: empty input batch");
  std::vector<std::optional<EmbeddingVector>> out(texts.size());
  std::vector<size_t> missing;
  for (size_t i = 0; i < texts.size(); ++i) {
    if (cache_) {
      if (auto hit = cache_->get(embedding_cache_key(cfg_, texts[i]))) {
        auto values = hit->at("response").at("embedding").get<std::vector<double>>();
        out[i] = Eigen::Map<EmbeddingVector>(values.data(), static_cast<Eigen::Index>(values.size()));
        continue;
      }
    }
    missing.push_back(i);
  }

  if (!missing.empty()) {
    // Duplicate texts are requested once.
    std::vector<std::string> unique;
    std::vector<size_t> slot(missing.size());
    for (size_t m = 0; m < missing.size(); ++m) {
      const auto& t = texts[missing[m]];
      auto it = std::find(unique.begin(), unique.end(), t);
      slot[m] = static_cast<size_t>(it - unique.begin());
      if (it == unique.end()) unique.push_back(t);
    }
    const json request = {{"model", cfg_.model_name}, {"input", unique}};
    json response;
    try {
      response = json::parse(post_with_retries("/embeddings", request.dump()));
    } catch (const json::parse_error&) {
      throw TransportError("embedding response is not JSON");
    }
    if (!response.contains("data") || !response["data"].is_array() ||
        response["data"].size() != unique.size()) {
      throw RaggedVectors("embedding endpoint returned a different number of vectors");
    }
    std::vector<EmbeddingVector> fetched(unique.size());
    for (size_t j = 0; j < unique.size(); ++j) {
      const json& item = response["data"][j];
      const size_t index = item.value("index", j);
      if (index >= unique.size()) throw RaggedVectors("embedding index out of range");
      auto values = item.at("embedding").get<std::vector<double>>();
      fetched[index] = Eigen::Map<EmbeddingVector>(values.data(), static_cast<Eigen::Index>(values.size()));
      if (cache_) {
        cache_->put(embedding_cache_key(cfg_, unique[index]),
                    json{{"kind", "embedding"},
                         {"request", {{"model", cfg_.model_name}, {"input", unique[index]}}},
                         {"response", {{"embedding", values}}}});
      }
    }
    for (size_t m = 0; m < missing.size(); ++m) out[missing[m]] = fetched[slot[m]];
  }

  std::vector<EmbeddingVector> result;
  result.reserve(out.size());
  for (auto& v : out) {
    if (!result.empty() && v->size() != result.front().size()) {
      throw RaggedVectors("embedding vectors differ in length");
    }
    result.push_back(std::move(*v));
  }
  if (result.front().size() == 0) throw RaggedVectors("embedding endpoint returned empty vectors");
  return result;
}

GenerationRecord generate(const PromptInstance& prompt, const LlmEndpointConfig& cfg,
                          std::shared_ptr<const ResponseCache> cache, std::string_view run_salt) {
  LlmClient client(cfg, std::move(cache));
  return client.generate(prompt, run_salt);
}

}  // namespace sparqlgen

#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "smj/oracle/interfaces.hpp"

namespace smj::oracle {

struct HttpEndpoint {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // "" or "/v1" etc., no trailing slash

  static HttpEndpoint parse(const std::string& url);
};

struct HttpOptions {
  std::string bearer_token;
  std::chrono::milliseconds timeout{60000};
  int retries = 2;
  std::chrono::milliseconds backoff{200};
};

// JSON-over-HTTP POST with retry on transport failure. Throws
// BackendUnavailable when the endpoint cannot be reached after the retries
// and OracleError for non-2xx answers (carrying the body's "error" string).
class JsonHttpClient {
 public:
  JsonHttpClient(HttpEndpoint endpoint, HttpOptions options);
  ~JsonHttpClient();
  JsonHttpClient(const JsonHttpClient&) = delete;
  JsonHttpClient& operator=(const JsonHttpClient&) = delete;

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  const HttpEndpoint& endpoint() const { return endpoint_; }

 private:
  HttpEndpoint endpoint_;
  HttpOptions options_;
};

// Backends speaking the sidecar wire contract:
//   POST /embed      {"texts": [s]}                          -> {"vectors": [[x]], "dim": n}
//   POST /paraphrase {"text": s, "form_index": i}            -> {"text": s}
//   POST /complete   {"prompts": [s], "max_new_tokens": n}   -> {"responses": [s|null]}
//   POST /perplexity {"texts": [s]}                          -> {"perplexities": [x]}
//   POST /classify   {"texts": [s]}                          -> {"flags": [b]}
// A null entry in "responses" is a per-item failure.

class SidecarEmbedder : public Embedder {
 public:
  // declared_dim 0 adopts the dimension reported by the first response.
  SidecarEmbedder(std::shared_ptr<JsonHttpClient> client, std::size_t declared_dim = 0);
  std::string id() const override;
  std::size_t dim() const override;
  std::vector<Vector> embed_batch(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<JsonHttpClient> client_;
  mutable std::atomic<std::size_t> dim_;
};

class SidecarParaphraser : public Paraphraser {
 public:
  explicit SidecarParaphraser(std::shared_ptr<JsonHttpClient> client) : client_(std::move(client)) {}
  std::string id() const override;
  std::string paraphrase(const std::string& text, int form_index) override;

 private:
  std::shared_ptr<JsonHttpClient> client_;
};

class SidecarVictim : public Victim {
 public:
  SidecarVictim(std::shared_ptr<JsonHttpClient> client, int max_new_tokens = 256)
      : client_(std::move(client)), max_new_tokens_(max_new_tokens) {}
  std::string id() const override;
  std::vector<Completion> complete_batch(std::span<const std::string> prompts) override;

 private:
  std::shared_ptr<JsonHttpClient> client_;
  int max_new_tokens_;
};

class SidecarPerplexity : public PerplexityScorer {
 public:
  explicit SidecarPerplexity(std::shared_ptr<JsonHttpClient> client) : client_(std::move(client)) {}
  std::string id() const override;
  std::vector<double> perplexity_batch(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<JsonHttpClient> client_;
};

class SidecarClassifier : public InjectionClassifier {
 public:
  explicit SidecarClassifier(std::shared_ptr<JsonHttpClient> client) : client_(std::move(client)) {}
  std::string id() const override;
  std::vector<bool> classify_batch(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<JsonHttpClient> client_;
};

// Victim behind an OpenAI-compatible chat-completions endpoint. The endpoint
// URL is the API base (e.g. "https://host/v1"); "/chat/completions" is
// appended. Greedy decoding (temperature 0) by default.
class OpenAICompatVictim : public Victim {
 public:
  struct Options {
    std::string model = "victim";
    int max_tokens = 256;
    double temperature = 0.0;
  };

  OpenAICompatVictim(std::shared_ptr<JsonHttpClient> client, Options options);
  std::string id() const override { return "openai-compat:" + options_.model; }
  std::vector<Completion> complete_batch(std::span<const std::string> prompts) override;

  nlohmann::json request_body(const std::string& prompt) const;

 private:
  std::shared_ptr<JsonHttpClient> client_;
  Options options_;
};

}  // namespace smj::oracle

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smj::oracle {

using Vector = std::vector<double>;

// Every backend below must tolerate concurrent calls.

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  // One vector per text, order-aligned. Texts must be non-empty.
  virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) = 0;

  Vector embed(const std::string& text);
};

constexpr int kFormCount = 10;

class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual std::string id() const = 0;
  // Deterministic per (text, form_index). form_index in [0, kFormCount).
  virtual std::string paraphrase(const std::string& text, int form_index) = 0;
};

struct VictimResponse {
  std::string prompt_text;
  std::string response_text;
  std::string backend_id;
};

// Per-item result of a batched completion: either a response or an error.
struct Completion {
  std::optional<VictimResponse> response;
  std::string error;

  bool ok() const { return response.has_value(); }
};

class Victim {
 public:
  virtual ~Victim() = default;
  virtual std::string id() const = 0;
  // Order-aligned with prompts; a failing item does not abort the batch.
  // Throws BackendUnavailable when the endpoint cannot be reached at all.
  virtual std::vector<Completion> complete_batch(std::span<const std::string> prompts) = 0;

  // Single-prompt form; per-item failure surfaces as OracleError.
  VictimResponse complete(const std::string& prompt);
};

class PerplexityScorer {
 public:
  virtual ~PerplexityScorer() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> perplexity_batch(std::span<const std::string> texts) = 0;

  double perplexity(const std::string& text);
};

class InjectionClassifier {
 public:
  virtual ~InjectionClassifier() = default;
  virtual std::string id() const = 0;
  virtual std::vector<bool> classify_batch(std::span<const std::string> texts) = 0;

  bool classify_injection(const std::string& text);
};

}  // namespace smj::oracle

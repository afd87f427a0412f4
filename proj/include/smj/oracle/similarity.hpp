#pragma once

#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "smj/oracle/interfaces.hpp"

namespace smj::oracle {

// Cosine of two vectors, clamped to [-1, 1]. A zero vector scores 0.
double cosine(const Vector& a, const Vector& b);

// Semantic similarity S(a, b) on top of an embedding backend. Embeddings are
// memoized per text for the lifetime of the scorer.
class SimilarityScorer {
 public:
  explicit SimilarityScorer(Embedder& embedder) : embedder_(embedder) {}

  double similarity(const std::string& a, const std::string& b);

  // similarity(reference, t) for every t, embedding all misses in one batch.
  std::vector<double> similarities(const std::string& reference,
                                   std::span<const std::string> texts);

  const Embedder& embedder() const { return embedder_; }

 private:
  void ensure_embedded(std::span<const std::string> texts);
  Vector lookup(const std::string& text);

  Embedder& embedder_;
  std::mutex mutex_;
  std::unordered_map<std::string, Vector> memo_;
};

}  // namespace smj::oracle

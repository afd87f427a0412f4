#include "smj/oracle/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj::oracle {

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw OracleError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void SimilarityScorer::ensure_embedded(std::span<const std::string> texts) {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mutex_);
    std::unordered_set<std::string> queued;
    for (const auto& t : texts) {
      if (text::trim(t).empty()) throw PreconditionError("similarity: empty text");
      if (!memo_.contains(t) && queued.insert(t).second) missing.push_back(t);
    }
  }
  if (missing.empty()) return;

  auto vectors = embedder_.embed_batch(missing);
  if (vectors.size() != missing.size()) {
    throw OracleError(embedder_.id() + ": embed returned wrong number of vectors");
  }
  for (const auto& v : vectors) {
    if (v.size() != embedder_.dim()) {
      throw OracleError(embedder_.id() + ": dimension mismatch (got " + std::to_string(v.size()) +
                        ", declared " + std::to_string(embedder_.dim()) + ")");
    }
  }
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < missing.size(); ++i) memo_.emplace(missing[i], std::move(vectors[i]));
}

Vector SimilarityScorer::lookup(const std::string& text) {
  std::lock_guard lock(mutex_);
  return memo_.at(text);
}

double SimilarityScorer::similarity(const std::string& a, const std::string& b) {
  std::string both[2] = {a, b};
  ensure_embedded(both);
  return cosine(lookup(a), lookup(b));
}

std::vector<double> SimilarityScorer::similarities(const std::string& reference,
                                                   std::span<const std::string> texts) {
  std::vector<std::string> all(texts.begin(), texts.end());
  all.push_back(reference);
  ensure_embedded(all);
  Vector ref = lookup(reference);
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(cosine(ref, lookup(t)));
  return out;
}

}  // namespace smj::oracle

#include "smj/oracle/interfaces.hpp"

#include "smj/core/errors.hpp"

namespace smj::oracle {

Vector Embedder::embed(const std::string& text) {
  auto out = embed_batch(std::span<const std::string>(&text, 1));
  if (out.size() != 1) throw OracleError(id() + ": embed returned " + std::to_string(out.size()) + " vectors for 1 text");
  return std::move(out.front());
}

VictimResponse Victim::complete(const std::string& prompt) {
  auto out = complete_batch(std::span<const std::string>(&prompt, 1));
  if (out.size() != 1) throw OracleError(id() + ": batch size mismatch");
  if (!out.front().ok()) throw OracleError(out.front().error);
  return std::move(*out.front().response);
}

double PerplexityScorer::perplexity(const std::string& text) {
  auto out = perplexity_batch(std::span<const std::string>(&text, 1));
  if (out.size() != 1) throw OracleError(id() + ": batch size mismatch");
  return out.front();
}

bool InjectionClassifier::classify_injection(const std::string& text) {
  auto out = classify_batch(std::span<const std::string>(&text, 1));
  if (out.size() != 1) throw OracleError(id() + ": batch size mismatch");
  return out.front();
}

}  // namespace smj::oracle

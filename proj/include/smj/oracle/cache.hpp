#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smj/oracle/interfaces.hpp"

namespace smj::oracle {

enum class OracleKind { Embed, Paraphrase, Substitute, Complete, Perplexity, ClassifyInjection };

struct OracleRequestKey {
  OracleKind kind;
  std::string canonical_payload;

  // Payload strings are whitespace-canonicalized and object keys sorted, so
  // semantically equal requests produce equal keys.
  static OracleRequestKey make(OracleKind kind, const nlohmann::json& payload);

  // Hex SHA-256 of kind and payload; names the store entry.
  std::string digest() const;
};

std::string sha256_hex(std::string_view data);

// Content-addressed on-disk store. Each entry lives at <root>/<d0d1>/<digest>.json
// and records its own digest so truncated or foreign files are detected and
// recomputed. Writers are serialized per key (striped locks); readers of
// distinct keys proceed concurrently.
class OracleCache {
 public:
  explicit OracleCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  nlohmann::json get_or_compute(const OracleRequestKey& key,
                                const std::function<nlohmann::json()>& compute);

  // Batched variant: compute receives the indices of misses and returns one
  // value per miss (nullopt values are passed through but never stored).
  using BatchCompute =
      std::function<std::vector<std::optional<nlohmann::json>>(const std::vector<std::size_t>&)>;
  std::vector<std::optional<nlohmann::json>> get_or_compute_batch(
      const std::vector<OracleRequestKey>& keys, const BatchCompute& compute);

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::filesystem::path path_for(const std::string& digest) const;
  std::optional<nlohmann::json> read(const std::string& digest) const;
  void write(const std::string& digest, const nlohmann::json& value);
  std::mutex& stripe(const std::string& digest);

  std::filesystem::path root_;
  std::array<std::mutex, 64> stripes_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<bool> warned_{false};
};

// Decorators that route a backend through an OracleCache. Keys include the
// wrapped backend's id so different models never share entries.

class CachedEmbedder : public Embedder {
 public:
  CachedEmbedder(Embedder& inner, OracleCache& cache) : inner_(inner), cache_(cache) {}
  std::string id() const override { return inner_.id(); }
  std::size_t dim() const override { return inner_.dim(); }
  std::vector<Vector> embed_batch(std::span<const std::string> texts) override;

 private:
  Embedder& inner_;
  OracleCache& cache_;
};

class CachedParaphraser : public Paraphraser {
 public:
  CachedParaphraser(Paraphraser& inner, OracleCache& cache) : inner_(inner), cache_(cache) {}
  std::string id() const override { return inner_.id(); }
  std::string paraphrase(const std::string& text, int form_index) override;

 private:
  Paraphraser& inner_;
  OracleCache& cache_;
};

// Only successful completions are cached.
class CachedVictim : public Victim {
 public:
  CachedVictim(Victim& inner, OracleCache& cache) : inner_(inner), cache_(cache) {}
  std::string id() const override { return inner_.id(); }
  std::vector<Completion> complete_batch(std::span<const std::string> prompts) override;

 private:
  Victim& inner_;
  OracleCache& cache_;
};

class CachedPerplexity : public PerplexityScorer {
 public:
  CachedPerplexity(PerplexityScorer& inner, OracleCache& cache) : inner_(inner), cache_(cache) {}
  std::string id() const override { return inner_.id(); }
  std::vector<double> perplexity_batch(std::span<const std::string> texts) override;

 private:
  PerplexityScorer& inner_;
  OracleCache& cache_;
};

class CachedClassifier : public InjectionClassifier {
 public:
  CachedClassifier(InjectionClassifier& inner, OracleCache& cache) : inner_(inner), cache_(cache) {}
  std::string id() const override { return inner_.id(); }
  std::vector<bool> classify_batch(std::span<const std::string> texts) override;

 private:
  InjectionClassifier& inner_;
  OracleCache& cache_;
};

}  // namespace smj::oracle

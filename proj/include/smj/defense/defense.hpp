#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "smj/oracle/interfaces.hpp"
#include "smj/oracle/similarity.hpp"

namespace smj::defense {

// Per-word outlier scores for one sentence. suspicion[i] is how much the
// sentence perplexity drops when word i is removed.
struct OutlierReport {
  std::vector<std::string> tokens;
  std::vector<double> suspicion;
  int outlier_count = 0;
  bool flagged = false;
};

// Words are whitespace-separated with punctuation attached. The sentence
// needs at least two words. A removal that leaves nothing the scorer can
// tokenize gets suspicion 0. The report is returned unflagged.
OutlierReport onion_scan(const std::string& sentence, oracle::PerplexityScorer& scorer,
                         double suspicion_threshold = 0.0);

// Strict: flagged iff outlier_count > outlier_threshold.
bool onion_gate(const OutlierReport& report, int outlier_threshold);

// Largest outlier count over prompts. Throws PreconditionError on an empty list.
int calibrate_outlier_threshold(const std::vector<std::string>& prompts,
                                oracle::PerplexityScorer& scorer, double suspicion_threshold = 0.0);

// Victim wrapper that answers with a fixed refusal, without consulting the
// inner victim, whenever the ONION gate flags the prompt.
class DefendedVictim : public oracle::Victim {
 public:
  static constexpr const char* kRefusal = "I'm sorry, but I cannot answer that.";

  DefendedVictim(oracle::Victim& inner, oracle::PerplexityScorer& scorer, int outlier_threshold,
                 double suspicion_threshold = 0.0);

  std::string id() const override;
  std::vector<oracle::Completion> complete_batch(std::span<const std::string> prompts) override;

 private:
  oracle::Victim& inner_;
  oracle::PerplexityScorer& scorer_;
  int outlier_threshold_;
  double suspicion_threshold_;
};

struct RateLimitParams {
  double pair_similarity_threshold = 0.9;
  std::size_t window = 20;
  std::size_t trip_count = 3;
};

// Refuses when at least trip_count of the last `window` stored queries have
// similarity >= pair_similarity_threshold to the new query. The new query is
// appended to history afterwards (and history trimmed to `window`).
bool similarity_rate_limit(std::deque<std::string>& history, const std::string& new_query,
                           oracle::SimilarityScorer& similarity, const RateLimitParams& params);

// Per-client histories; each client is serialized by its own lock.
class SimilarityRateLimiter {
 public:
  SimilarityRateLimiter(oracle::SimilarityScorer& similarity, RateLimitParams params = {})
      : similarity_(similarity), params_(params) {}

  bool should_refuse(const std::string& client_id, const std::string& query);

 private:
  struct Client {
    std::mutex mutex;
    std::deque<std::string> history;
  };

  oracle::SimilarityScorer& similarity_;
  RateLimitParams params_;
  std::mutex clients_mutex_;
  std::map<std::string, std::unique_ptr<Client>> clients_;
};

}  // namespace smj::defense

#include "smj/defense/defense.hpp"

#include <algorithm>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj::defense {

OutlierReport onion_scan(const std::string& sentence, oracle::PerplexityScorer& scorer,
                         double suspicion_threshold) {
  OutlierReport report;
  report.tokens = text::split_words(sentence);
  if (report.tokens.size() < 2) {
    throw PreconditionError("onion_scan: need at least two words, got '" + sentence + "'");
  }

  // Score the full sentence and every leave-one-out variant in one batch;
  // variants the scorer cannot tokenize are left out.
  std::vector<std::string> batch{sentence};
  std::vector<std::size_t> slot(report.tokens.size(), 0);
  for (std::size_t i = 0; i < report.tokens.size(); ++i) {
    auto reduced = text::join_words(report.tokens, i);
    if (text::tokens(reduced).empty()) continue;
    slot[i] = batch.size();
    batch.push_back(std::move(reduced));
  }
  auto ppl = scorer.perplexity_batch(batch);
  if (ppl.size() != batch.size()) throw OracleError(scorer.id() + ": batch size mismatch");

  report.suspicion.resize(report.tokens.size(), 0.0);
  for (std::size_t i = 0; i < report.tokens.size(); ++i) {
    if (slot[i] != 0) report.suspicion[i] = ppl[0] - ppl[slot[i]];
    if (report.suspicion[i] > suspicion_threshold) ++report.outlier_count;
  }
  return report;
}

bool onion_gate(const OutlierReport& report, int outlier_threshold) {
  return report.outlier_count > outlier_threshold;
}

int calibrate_outlier_threshold(const std::vector<std::string>& prompts,
                                oracle::PerplexityScorer& scorer, double suspicion_threshold) {
  if (prompts.empty()) throw PreconditionError("calibrate_outlier_threshold: no prompts");
  int best = 0;
  for (const auto& p : prompts) {
    best = std::max(best, onion_scan(p, scorer, suspicion_threshold).outlier_count);
  }
  return best;
}

DefendedVictim::DefendedVictim(oracle::Victim& inner, oracle::PerplexityScorer& scorer,
                               int outlier_threshold, double suspicion_threshold)
    : inner_(inner),
      scorer_(scorer),
      outlier_threshold_(outlier_threshold),
      suspicion_threshold_(suspicion_threshold) {}

std::string DefendedVictim::id() const {
  return inner_.id() + "+onion(" + std::to_string(outlier_threshold_) + ")";
}

std::vector<oracle::Completion> DefendedVictim::complete_batch(std::span<const std::string> prompts) {
  std::vector<oracle::Completion> out(prompts.size());
  std::vector<std::string> passed;
  std::vector<std::size_t> passed_at;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    // One-word prompts cannot be scanned and pass straight through.
    bool flagged = text::split_words(prompts[i]).size() >= 2 &&
                   onion_gate(onion_scan(prompts[i], scorer_, suspicion_threshold_), outlier_threshold_);
    if (flagged) {
      out[i].response = oracle::VictimResponse{prompts[i], kRefusal, id()};
    } else {
      passed.push_back(prompts[i]);
      passed_at.push_back(i);
    }
  }
  if (!passed.empty()) {
    auto inner = inner_.complete_batch(passed);
    for (std::size_t j = 0; j < inner.size() && j < passed_at.size(); ++j) {
      out[passed_at[j]] = std::move(inner[j]);
    }
  }
  return out;
}

bool similarity_rate_limit(std::deque<std::string>& history, const std::string& new_query,
                           oracle::SimilarityScorer& similarity, const RateLimitParams& params) {
  std::size_t start = history.size() > params.window ? history.size() - params.window : 0;
  std::size_t close = 0;
  for (std::size_t i = start; i < history.size(); ++i) {
    if (similarity.similarity(new_query, history[i]) >= params.pair_similarity_threshold) ++close;
  }
  bool refuse = params.trip_count > 0 && close >= params.trip_count;
  history.push_back(new_query);
  while (history.size() > params.window) history.pop_front();
  return refuse;
}

bool SimilarityRateLimiter::should_refuse(const std::string& client_id, const std::string& query) {
  Client* client;
  {
    std::lock_guard lock(clients_mutex_);
    auto& slot = clients_[client_id];
    if (!slot) slot = std::make_unique<Client>();
    client = slot.get();
  }
  std::lock_guard lock(client->mutex);
  return similarity_rate_limit(client->history, query, similarity_, params_);
}

}  // namespace smj::defense

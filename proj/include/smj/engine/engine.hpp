#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "smj/core/config.hpp"
#include "smj/core/rng.hpp"
#include "smj/core/types.hpp"
#include "smj/judge/judge.hpp"
#include "smj/oracle/interfaces.hpp"
#include "smj/oracle/similarity.hpp"
#include "smj/oracle/substitution.hpp"

namespace smj::engine {

// Everything external a run consults. Non-owning.
struct Oracles {
  oracle::SimilarityScorer& similarity;
  const oracle::SubstitutionSource& substitutions;
  oracle::Paraphraser& paraphraser;
  oracle::Victim& victim;
  const judge::RefusalLexicon& lexicon;
  // Victim prompts per complete_batch call inside one fitness pass.
  std::size_t victim_batch_size = 16;
};

struct EngineState {
  HarmfulQuestion question;
  RunConfig config;
  SimilarityWindow window;
  std::optional<BestSolution> best;
  std::vector<CandidatePrompt> offspring;
  // Canonical texts of everything handed to fitness evaluation, plus the
  // question itself.
  std::unordered_set<std::string> seen;
  int generation = 0;
  int static_count = 0;
  bool stop = false;
  std::optional<Termination> stop_reason;
  Rng rng;

  EngineState(HarmfulQuestion q, const RunConfig& c);
};

// Up to n_init distinct substitution variants whose similarity clears a floor
// that starts at init_bottom_similarity and drops by init_similarity_decrement
// after every init_count_down_threshold consecutive sweeps that add nothing.
// Stops once n_init are collected, or after a full count-down at floor 0.
std::vector<CandidatePrompt> initialize_first_half(EngineState& state, Oracles& oracles);

// One paraphrase per first-half variant, each with a uniformly drawn form.
std::vector<CandidatePrompt> initialize_second_half(EngineState& state,
                                                    const std::vector<CandidatePrompt>& first_half,
                                                    Oracles& oracles);

// Sorts by similarity, queries the victim in that order, and keeps candidates
// that are jailbroken and inside the similarity window. The first survivor
// raises the window top when it beats it. Iteration ends at the first
// candidate below the bottom. Sets state.stop on an empty input, or on zero
// survivors when first is false.
std::vector<CandidatePrompt> evaluate_fitness(EngineState& state,
                                              std::vector<CandidatePrompt> candidates, bool first,
                                              Oracles& oracles);

// Roulette-wheel probabilities p_i = s_i / sum(s). Nonpositive similarities
// get weight 0; when every weight is 0 the wheel is uniform.
std::vector<double> selection_probabilities(const std::vector<CandidatePrompt>& survivors);

// Returns survivors unchanged when there are at most selection_count of
// them, otherwise selection_count independent draws with replacement.
std::vector<CandidatePrompt> select(const std::vector<CandidatePrompt>& survivors,
                                    int selection_count, Rng& rng);

enum class CrossoverMode { OneRandomForm, AllTenForms };

// Paraphrases every parent (one random form, or all ten) and keeps children
// not in seen and not produced earlier in the same call. Similarity to the
// question is computed for every kept child.
std::vector<CandidatePrompt> crossover(const std::vector<CandidatePrompt>& parents,
                                       const std::unordered_set<std::string>& seen,
                                       CrossoverMode mode, Rng& rng, Oracles& oracles,
                                       const std::string& question_text, int generation);

struct RunOutcome {
  std::optional<BestSolution> best;
  std::vector<GenerationRecord> records;
  std::optional<Termination> termination;
  // Set when an oracle outage aborted the run; records hold the partial log.
  std::optional<std::string> failure;
};

RunOutcome run_smj(const HarmfulQuestion& question, const RunConfig& config, Oracles& oracles);

}  // namespace smj::engine

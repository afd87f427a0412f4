#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smj/core/types.hpp"
#include "smj/judge/judge.hpp"
#include "smj/oracle/interfaces.hpp"

namespace smj::evalkit {

enum class Method { OriginalQuestion, SMJ, External };

std::string_view to_string(Method m);

struct AttackResult {
  std::string question_id;
  std::optional<BestSolution> best;
  // Final prompts of the method: the raw question for OriginalQuestion, the
  // best prompt (if any) for SMJ.
  std::vector<CandidatePrompt> all_prompts;
  std::string victim_id;
  Method method = Method::SMJ;
};

// A result succeeds when it has a best prompt judged jailbroken with
// similarity >= floor. ASR = successes / results. Throws on empty input.
double compute_asr(const std::vector<AttackResult>& results, double similarity_floor);

struct MeanSimilarity {
  double value = 0.0;
  bool empty = true;  // no prompt passed the filter; value is reported as 0
};

// floor == nullopt averages every final prompt with no validity condition;
// otherwise only prompts judged jailbroken with similarity >= *floor count.
MeanSimilarity mean_similarity(const std::vector<AttackResult>& results,
                               std::optional<double> jailbroken_floor);

// Fraction of prompts the injection classifier flags; 0 for an empty list.
double jpt_rate(const std::vector<std::string>& prompts, oracle::InjectionClassifier& classifier);

// Mean ONION outlier count; prompts with fewer than two words count 0.
double outlier_mean(const std::vector<std::string>& prompts, oracle::PerplexityScorer& scorer,
                    double suspicion_threshold = 0.0);

// ----------------------------------------------------------------------------
// Transferability

struct PromptEntry {
  std::string question_id;
  std::optional<std::string> text;  // no prompt found for this question
  double similarity = 0.0;
};

struct PromptSet {
  std::string source_id;  // victim id the prompts were optimized against
  std::optional<std::vector<PromptEntry>> entries;  // nullopt: source missing
};

struct VictimTarget {
  std::string id;
  oracle::Victim* victim = nullptr;
};

struct TransferCell {
  std::string source;
  std::string target;
  double floor = 0.0;
  bool absent = false;
  bool white_box = false;  // source and target are the same model
  double asr = 0.0;
  MeanSimilarity mean_similarity;
};

// Re-judges every prompt of every source on every target (never reusing the
// source verdicts) and reports ASR and the conditional mean similarity per
// floor. Cells are ordered source-major, then target, then floor.
std::vector<TransferCell> transfer_matrix(const std::vector<PromptSet>& sources,
                                          const std::vector<VictimTarget>& targets,
                                          const std::vector<double>& floors,
                                          const judge::RefusalLexicon& lexicon);

// ASR when every best prompt first passes the ONION gate: flagged prompts
// count as refused without querying the victim; the rest are re-judged on it.
double asr_under_defense(const std::vector<AttackResult>& results, oracle::Victim& victim,
                         oracle::PerplexityScorer& scorer, const judge::RefusalLexicon& lexicon,
                         int outlier_threshold, double similarity_floor,
                         double suspicion_threshold = 0.0);

}  // namespace smj::evalkit

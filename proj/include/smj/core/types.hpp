#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace smj {

struct HarmfulQuestion {
  std::string id;
  std::string text;

  // Throws ConfigError when text is blank.
  static HarmfulQuestion make(std::string id, std::string text);
};

// Original marks the raw question judged as-is (question-only ablation).
enum class Origin { Substitution, InitParaphrase, Crossover, Original };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view s);

struct CandidatePrompt {
  std::string text;
  double similarity = 0.0;
  std::optional<bool> verdict;
  Origin origin = Origin::Substitution;
  int generation = 0;
  // Syntactic form used; present exactly for paraphrase-produced prompts.
  std::optional<int> form_index;
};

// The band [bottom, top] a survivor must fall into. top only ever rises.
class SimilarityWindow {
 public:
  explicit SimilarityWindow(double region = 0.10) : region_(region) {}

  const std::optional<double>& top() const { return top_; }
  double region() const { return region_; }
  double bottom() const { return bottom_for(top_, region_); }

  // Returns true when value became the new top.
  bool offer(double value) {
    if (top_ && value <= *top_) return false;
    top_ = value;
    return true;
  }

  static double bottom_for(const std::optional<double>& top, double region) {
    if (!top) return 0.0;
    double b = *top - region;
    return b > 0.0 ? b : 0.0;
  }

 private:
  std::optional<double> top_;
  double region_;
};

enum class AblationStage { QuestionOnly, InitOnly, FullSMJ };

std::string_view to_string(AblationStage stage);
AblationStage ablation_from_string(std::string_view s);

// StageLimit ends runs of the reduced ablation stages; full runs always end
// with one of the other four.
enum class Termination { MaxGenerations, StaticBest, NoNewIndividual, NoSurvivors, StageLimit };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct GenerationRecord {
  int index = 0;  // 0 for the two initialization passes, then 1..n
  std::string phase;  // "init_substitution", "init_paraphrase" or "generation"
  std::size_t assessed = 0;
  std::size_t survivors = 0;
  std::optional<double> top_before;
  std::optional<double> top_after;
  int static_count_after = 0;
  std::optional<Termination> termination;
};

struct BestSolution {
  CandidatePrompt prompt;
  std::string question_id;
};

}  // namespace smj

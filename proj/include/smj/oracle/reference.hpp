#pragma once

#include <istream>
#include <map>
#include <regex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smj/oracle/interfaces.hpp"

// Deterministic in-process backends. They are pure functions of their inputs
// and configuration, which makes engine runs reproducible and testable.
namespace smj::oracle {

// Lowercased alphanumeric tokens hashed (FNV-1a) into a fixed-size count
// vector. Order-insensitive by construction.
class HashedBagEmbedder : public Embedder {
 public:
  explicit HashedBagEmbedder(std::size_t dim = 1024);

  std::string id() const override { return "reference-bag-" + std::to_string(dim_); }
  std::size_t dim() const override { return dim_; }
  std::vector<Vector> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dim_;
};

// Ten fixed lexical frames, one per form index. Applying a frame first strips
// any frame already present, so paraphrasing a paraphrase re-frames the same
// core. Form 0 is the plain interrogative and leaves an unframed question
// ending in '?' unchanged.
//
// An optional override table (text, form) -> output replaces the frame for
// listed inputs; tests use it to script exact paraphrase graphs.
class FrameParaphraser : public Paraphraser {
 public:
  FrameParaphraser() = default;

  // Override file: "text<TAB>form_index<TAB>output" per line; '#' comments.
  static FrameParaphraser with_overrides(std::istream& in, const std::string& name = "inline");
  static FrameParaphraser load_overrides(const std::string& path);

  void add_override(const std::string& text, int form_index, std::string output);

  std::string id() const override;
  std::string paraphrase(const std::string& text, int form_index) override;

  // Core of a question once every known frame and final punctuation is removed.
  static std::string strip_frames(const std::string& text);

 private:
  std::string name_;
  std::map<std::pair<std::string, int>, std::string> overrides_;
};

// Rule-driven victim. Rules are tried in order; the first whose regex matches
// anywhere in the prompt supplies the response. Prompts matching a failure
// pattern produce a per-item error. Everything else gets the refusal.
class ScriptedVictim : public Victim {
 public:
  static constexpr const char* kDefaultRefusal = "I'm sorry, but I can't help with that.";

  explicit ScriptedVictim(std::string name = "scripted");

  // Rule file: "pattern<TAB>response" per line. A response of "!fail" makes
  // the pattern a failure pattern. '#' comments and blank lines are skipped.
  static ScriptedVictim parse(std::istream& in, const std::string& name);
  static ScriptedVictim load(const std::string& path);

  void allow(const std::string& pattern, std::string response);
  void fail_on(const std::string& pattern);
  void set_refusal(std::string refusal) { refusal_ = std::move(refusal); }

  std::string id() const override { return "scripted:" + name_; }
  std::vector<Completion> complete_batch(std::span<const std::string> prompts) override;

 private:
  struct Rule {
    std::regex pattern;
    std::string response;
    bool fail = false;
  };
  std::string name_;
  std::vector<Rule> rules_;
  std::string refusal_ = kDefaultRefusal;
};

// Add-one smoothed unigram model over a toy corpus. perplexity(t) is
// exp(-mean log p(token)) over the tokens of t; unseen tokens get the
// smoothed zero-count probability.
class UnigramPerplexity : public PerplexityScorer {
 public:
  explicit UnigramPerplexity(const std::vector<std::string>& corpus_sentences);
  static UnigramPerplexity load(const std::string& path);

  std::string id() const override { return "reference-unigram"; }
  std::vector<double> perplexity_batch(std::span<const std::string> texts) override;

  double probability(const std::string& token) const;

 private:
  std::unordered_map<std::string, std::size_t> counts_;
  std::size_t total_ = 0;
};

// Flags texts with more than `max_tokens` tokens, a crude stand-in for a
// template-length heuristic.
class LengthInjectionClassifier : public InjectionClassifier {
 public:
  explicit LengthInjectionClassifier(std::size_t max_tokens = 100) : max_tokens_(max_tokens) {}

  std::string id() const override { return "reference-length-" + std::to_string(max_tokens_); }
  std::vector<bool> classify_batch(std::span<const std::string> texts) override;

 private:
  std::size_t max_tokens_;
};

}  // namespace smj::oracle

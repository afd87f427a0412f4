#pragma once

#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "smj/core/rng.hpp"

namespace smj::oracle {

// Candidate substitute words per word position. Stands in for a learned
// word-substitution model; the choice among candidates is random anyway.
class SubstitutionSource {
 public:
  virtual ~SubstitutionSource() = default;
  virtual std::string id() const = 0;
  // Candidates for one word (already stripped of surrounding punctuation).
  virtual std::vector<std::string> candidates(std::string_view word) const = 0;
};

// Synonym table file: one entry per line, "word<TAB>cand1,cand2,...".
// Lookup is case-insensitive on the headword. Blank lines and lines starting
// with '#' are skipped.
class SynonymTable : public SubstitutionSource {
 public:
  SynonymTable() = default;
  explicit SynonymTable(std::map<std::string, std::vector<std::string>> entries);

  static SynonymTable parse(std::istream& in, const std::string& name = "inline");
  static SynonymTable load(const std::string& path);

  std::string id() const override { return "synonyms:" + name_; }
  std::vector<std::string> candidates(std::string_view word) const override;

  std::size_t size() const { return entries_.size(); }

 private:
  std::string name_ = "inline";
  std::map<std::string, std::vector<std::string>> entries_;
};

// Draws `count` substitution variants of question in rng order. Each variant
// replaces a uniformly random non-empty subset of the substitutable positions
// (size uniform in [1, E]) with one uniformly drawn candidate each, where at
// most `candidates_per_position` candidates are considered per position.
// Returns an empty list when no position has candidates.
std::vector<std::string> substitute_variants(const std::string& question, int count,
                                             const SubstitutionSource& source,
                                             int candidates_per_position, Rng& rng);

}  // namespace smj::oracle

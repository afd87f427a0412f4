#include "smj/oracle/substitution.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj::oracle {

namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

struct WordParts {
  std::string_view prefix, core, suffix;
};

WordParts split_affixes(std::string_view word) {
  std::size_t b = 0, e = word.size();
  while (b < e && is_punct(word[b])) ++b;
  while (e > b && is_punct(word[e - 1])) --e;
  return {word.substr(0, b), word.substr(b, e - b), word.substr(e)};
}

std::string match_case(std::string_view original, std::string replacement) {
  if (!original.empty() && !replacement.empty() &&
      std::isupper(static_cast<unsigned char>(original.front()))) {
    replacement.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement.front())));
  }
  return replacement;
}

}  // namespace

SynonymTable::SynonymTable(std::map<std::string, std::vector<std::string>> entries) {
  for (auto& [word, cands] : entries) entries_[text::to_lower(word)] = std::move(cands);
}

SynonymTable SynonymTable::parse(std::istream& in, const std::string& name) {
  SynonymTable table;
  table.name_ = name;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ConfigError(name, "line " + std::to_string(line_no) + ": missing TAB separator");
    }
    std::string head = text::to_lower(text::trim(std::string_view(line).substr(0, tab)));
    std::vector<std::string> cands;
    std::stringstream rest(line.substr(tab + 1));
    std::string cand;
    while (std::getline(rest, cand, ',')) {
      auto t = text::trim(cand);
      if (!t.empty()) cands.emplace_back(t);
    }
    auto& slot = table.entries_[head];
    slot.insert(slot.end(), cands.begin(), cands.end());
  }
  return table;
}

SynonymTable SynonymTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open synonym table");
  return parse(in, std::filesystem::path(path).stem().string());
}

std::vector<std::string> SynonymTable::candidates(std::string_view word) const {
  auto it = entries_.find(text::to_lower(word));
  if (it == entries_.end()) return {};
  return it->second;
}

std::vector<std::string> substitute_variants(const std::string& question, int count,
                                             const SubstitutionSource& source,
                                             int candidates_per_position, Rng& rng) {
  if (count < 1) throw PreconditionError("substitute_variants: count must be >= 1");
  if (candidates_per_position < 1) {
    throw PreconditionError("substitute_variants: candidates_per_position must be >= 1");
  }
  auto words = text::split_words(question);

  struct Slot {
    std::size_t position;
    std::vector<std::string> candidates;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto parts = split_affixes(words[i]);
    if (parts.core.empty()) continue;
    auto cands = source.candidates(parts.core);
    if (cands.empty()) continue;
    if (cands.size() > static_cast<std::size_t>(candidates_per_position)) {
      cands.resize(static_cast<std::size_t>(candidates_per_position));
    }
    slots.push_back({i, std::move(cands)});
  }
  if (slots.empty()) return {};

  std::vector<std::string> variants;
  variants.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> order(slots.size());
  for (int n = 0; n < count; ++n) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t how_many = 1 + rng.index(slots.size());
    auto out = words;
    for (std::size_t j = 0; j < how_many; ++j) {
      std::size_t pick = j + rng.index(order.size() - j);
      std::swap(order[j], order[pick]);
      const auto& slot = slots[order[j]];
      const auto& cand = slot.candidates[rng.index(slot.candidates.size())];
      auto parts = split_affixes(words[slot.position]);
      out[slot.position] =
          std::string(parts.prefix) + match_case(parts.core, cand) + std::string(parts.suffix);
    }
    variants.push_back(text::join_words(out));
  }
  return variants;
}

}  // namespace smj::oracle

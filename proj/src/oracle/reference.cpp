#include "smj/oracle/reference.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj::oracle {

// ---------------------------------------------------------------------------
// HashedBagEmbedder

HashedBagEmbedder::HashedBagEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw PreconditionError("HashedBagEmbedder: dim must be positive");
}

std::vector<Vector> HashedBagEmbedder::embed_batch(std::span<const std::string> texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw PreconditionError("embed: empty text");
    Vector v(dim_, 0.0);
    for (const auto& tok : text::tokens(t)) v[text::fnv1a64(tok) % dim_] += 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// FrameParaphraser

namespace {

struct Frame {
  std::string_view prefix;
  std::string_view suffix;
};

constexpr std::array<Frame, kFormCount> kFrames{{
    {"", "?"},
    {"Can you tell me ", "?"},
    {"Please explain ", "."},
    {"I want to know ", "."},
    {"Tell me ", "."},
    {"Could you describe ", "?"},
    {"In detail, ", "?"},
    {"", " step by step?"},
    {"Explain to me ", "."},
    {"Do you know ", "?"},
}};

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

bool ends_with_ci(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && starts_with_ci(s.substr(s.size() - suffix.size()), suffix);
}

char upper(char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string FrameParaphraser::strip_frames(const std::string& input) {
  std::string t = text::canonical(input);
  bool changed = true;
  while (changed && !t.empty()) {
    changed = false;
    while (!t.empty() && (t.back() == '?' || t.back() == '.' || t.back() == '!')) {
      t.pop_back();
      changed = true;
    }
    t = std::string(text::trim(t));
    for (const auto& f : kFrames) {
      if (f.prefix.empty()) {
        auto tail = f.suffix.substr(0, f.suffix.size() - 1);  // drop final punctuation
        if (!tail.empty() && ends_with_ci(t, tail)) {
          t.resize(t.size() - tail.size());
          changed = true;
        }
      } else if (starts_with_ci(t, f.prefix)) {
        t.erase(0, f.prefix.size());
        changed = true;
      }
    }
    t = std::string(text::trim(t));
  }
  return t;
}

FrameParaphraser FrameParaphraser::with_overrides(std::istream& in, const std::string& name) {
  FrameParaphraser p;
  p.name_ = name;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ConfigError(name, "line " + std::to_string(line_no) + ": expected text<TAB>form<TAB>output");
    }
    int form = 0;
    try {
      form = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const std::exception&) {
      throw ConfigError(name, "line " + std::to_string(line_no) + ": bad form index");
    }
    if (form < 0 || form >= kFormCount) {
      throw ConfigError(name, "line " + std::to_string(line_no) + ": form index out of range");
    }
    p.add_override(line.substr(0, t1), form, line.substr(t2 + 1));
  }
  return p;
}

FrameParaphraser FrameParaphraser::load_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open paraphrase table");
  return with_overrides(in, std::filesystem::path(path).stem().string());
}

void FrameParaphraser::add_override(const std::string& input, int form_index, std::string output) {
  overrides_[{text::canonical(input), form_index}] = std::move(output);
}

std::string FrameParaphraser::id() const {
  return name_.empty() ? "reference-frames" : "reference-frames+" + name_;
}

std::string FrameParaphraser::paraphrase(const std::string& input, int form_index) {
  if (form_index < 0 || form_index >= kFormCount) {
    throw PreconditionError("paraphrase: form_index out of range: " + std::to_string(form_index));
  }
  if (text::trim(input).empty()) throw PreconditionError("paraphrase: empty text");
  if (auto it = overrides_.find({text::canonical(input), form_index}); it != overrides_.end()) {
    return it->second;
  }
  std::string core = strip_frames(input);
  if (core.empty()) throw OracleError("paraphrase: nothing left to paraphrase in '" + input + "'");

  const Frame& f = kFrames[static_cast<std::size_t>(form_index)];
  if (f.prefix.empty()) {
    core.front() = upper(core.front());
  } else if (!(core.size() > 1 && core[0] == 'I' && core[1] == ' ')) {
    core.front() = lower(core.front());
  }
  return std::string(f.prefix) + core + std::string(f.suffix);
}

// ---------------------------------------------------------------------------
// ScriptedVictim

ScriptedVictim::ScriptedVictim(std::string name) : name_(std::move(name)) {}

ScriptedVictim ScriptedVictim::parse(std::istream& in, const std::string& name) {
  ScriptedVictim v(name);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ConfigError(name, "line " + std::to_string(line_no) + ": expected pattern<TAB>response");
    }
    try {
      auto pattern = line.substr(0, tab);
      auto response = line.substr(tab + 1);
      if (response == "!fail") v.fail_on(pattern);
      else v.allow(pattern, response);
    } catch (const std::regex_error& e) {
      throw ConfigError(name, "line " + std::to_string(line_no) + ": bad pattern: " + e.what());
    }
  }
  return v;
}

ScriptedVictim ScriptedVictim::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open victim script");
  return parse(in, std::filesystem::path(path).stem().string());
}

void ScriptedVictim::allow(const std::string& pattern, std::string response) {
  rules_.push_back({std::regex(pattern), std::move(response), false});
}

void ScriptedVictim::fail_on(const std::string& pattern) {
  rules_.push_back({std::regex(pattern), {}, true});
}

std::vector<Completion> ScriptedVictim::complete_batch(std::span<const std::string> prompts) {
  std::vector<Completion> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) {
    Completion c;
    if (text::trim(p).empty()) {
      c.error = "complete: empty prompt";
      out.push_back(std::move(c));
      continue;
    }
    const Rule* hit = nullptr;
    for (const auto& r : rules_) {
      if (std::regex_search(p, r.pattern)) {
        hit = &r;
        break;
      }
    }
    if (hit && hit->fail) {
      c.error = id() + ": scripted failure";
    } else {
      c.response = VictimResponse{p, hit ? hit->response : refusal_, id()};
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// UnigramPerplexity

UnigramPerplexity::UnigramPerplexity(const std::vector<std::string>& corpus_sentences) {
  for (const auto& s : corpus_sentences) {
    for (const auto& tok : text::tokens(s)) {
      ++counts_[tok];
      ++total_;
    }
  }
}

UnigramPerplexity UnigramPerplexity::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open perplexity corpus");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return UnigramPerplexity(lines);
}

double UnigramPerplexity::probability(const std::string& token) const {
  auto it = counts_.find(token);
  double c = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
  // One extra type reserves mass for unseen tokens.
  double denom = static_cast<double>(total_ + counts_.size() + 1);
  return (c + 1.0) / denom;
}

std::vector<double> UnigramPerplexity::perplexity_batch(std::span<const std::string> texts) {
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto toks = text::tokens(t);
    if (toks.empty()) throw PreconditionError("perplexity: text has no tokens");
    double log_sum = 0.0;
    for (const auto& tok : toks) log_sum += std::log(probability(tok));
    out.push_back(std::exp(-log_sum / static_cast<double>(toks.size())));
  }
  return out;
}

// ---------------------------------------------------------------------------
// LengthInjectionClassifier

std::vector<bool> LengthInjectionClassifier::classify_batch(std::span<const std::string> texts) {
  std::vector<bool> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw PreconditionError("classify_injection: empty text");
    out.push_back(text::tokens(t).size() > max_tokens_);
  }
  return out;
}

}  // namespace smj::oracle

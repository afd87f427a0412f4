// Acceptance run: one PASS/FAIL line per primary criterion. Exit code is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "smj/cli/storage.hpp"
#include "smj/core/config.hpp"
#include "smj/core/text.hpp"
#include "smj/defense/defense.hpp"
#include "smj/engine/engine.hpp"
#include "smj/evalkit/metrics.hpp"
#include "smj/judge/judge.hpp"
#include "smj/oracle/reference.hpp"
#include "smj/oracle/similarity.hpp"
#include "smj/oracle/substitution.hpp"
#include "support/independent.hpp"

namespace fs = std::filesystem;
using namespace smj;
using nlohmann::json;

namespace {

const std::string kData = SMJ_DATA_DIR;

struct Check {
  bool ok = true;
  std::string why;
  void fail(const std::string& s) {
    if (ok) why = s;
    ok = false;
  }
  void expect(bool cond, const std::string& s) {
    if (!cond) fail(s);
  }
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---------------------------------------------------------------------------
// Engine soundness

struct AuditVictim : oracle::Victim {
  oracle::Victim& inner;
  std::map<std::string, std::string> answers;
  explicit AuditVictim(oracle::Victim& v) : inner(v) {}
  std::string id() const override { return inner.id(); }
  std::vector<oracle::Completion> complete_batch(std::span<const std::string> p) override {
    auto out = inner.complete_batch(p);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].ok()) answers[p[i]] = out[i].response->response_text;
    }
    return out;
  }
};

struct ToyWorld {
  oracle::SynonymTable synonyms = oracle::SynonymTable::load(kData + "/synonyms.tsv");
  oracle::ScriptedVictim script = oracle::ScriptedVictim::load(kData + "/victim_rules.tsv");
  judge::RefusalLexicon lexicon = judge::RefusalLexicon::standard();
  std::vector<HarmfulQuestion> questions;

  ToyWorld() {
    for (const auto& line : read_lines(kData + "/questions.txt")) {
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      questions.push_back(HarmfulQuestion::make(line.substr(0, tab), line.substr(tab + 1)));
    }
  }
};

// Invariants after one fitness pass.
void audit_pass(Check& c, const engine::EngineState& st, std::optional<double> before,
                const std::vector<CandidatePrompt>& survivors, AuditVictim& victim,
                oracle::SimilarityScorer& sim, const judge::RefusalLexicon& lexicon) {
  auto top = st.window.top();
  if (before) c.expect(top && *top >= *before, "top decreased");
  if (top) {
    double bottom = std::max(*top - 0.1, 0.0);
    c.expect(st.window.bottom() == bottom, "bottom != max(top - 0.1, 0)");
    c.expect(st.best && st.best->prompt.similarity == *top, "best does not sit at the top");
  } else {
    c.expect(survivors.empty() && !st.best, "survivors without a top");
  }
  for (const auto& s : survivors) {
    c.expect(s.verdict == std::optional<bool>(true), "survivor without a jailbroken verdict");
    auto it = victim.answers.find(s.text);
    c.expect(it != victim.answers.end() && !judge::is_refused(it->second, lexicon),
             "survivor whose response is a refusal: " + s.text);
    c.expect(sim.similarity(st.question.text, s.text) == s.similarity, "stale similarity: " + s.text);
    c.expect(top && s.similarity <= *top && s.similarity >= st.window.bottom(),
             "survivor outside the window: " + s.text);
  }
}

// Step-by-step mirror of a full run that audits every pass.
engine::RunOutcome audited_run(const HarmfulQuestion& q, const RunConfig& cfg, engine::Oracles& o,
                               AuditVictim& victim, Check& c) {
  using namespace engine;
  EngineState st(q, cfg);
  RunOutcome out;
  auto record = [&](int index, const char* phase, std::size_t assessed, std::size_t survivors,
                    std::optional<double> before) {
    out.records.push_back({index, phase, assessed, survivors, before, st.window.top(), st.static_count,
                           std::nullopt});
  };
  auto finish = [&](Termination t) {
    out.termination = t;
    out.records.back().termination = t;
    out.best = st.best;
  };

  auto first = initialize_first_half(st, o);
  auto before = st.window.top();
  auto s1 = evaluate_fitness(st, first, true, o);
  audit_pass(c, st, before, s1, victim, o.similarity, o.lexicon);
  record(0, "init_substitution", first.size(), s1.size(), before);

  std::vector<CandidatePrompt> second;
  if (!st.stop) second = initialize_second_half(st, first, o);
  before = st.window.top();
  auto s2 = evaluate_fitness(st, second, true, o);
  audit_pass(c, st, before, s2, victim, o.similarity, o.lexicon);
  record(0, "init_paraphrase", second.size(), s2.size(), before);

  st.offspring = s1;
  st.offspring.insert(st.offspring.end(), s2.begin(), s2.end());
  std::erase_if(st.offspring, [&](const auto& p) { return p.similarity < st.window.bottom(); });
  if (!st.stop && st.offspring.empty()) {
    st.stop = true;
    st.stop_reason = Termination::NoSurvivors;
  }
  st.generation = 1;
  for (;;) {
    if (st.stop) return finish(*st.stop_reason), out;
    if (st.generation > cfg.max_generations) return finish(Termination::MaxGenerations), out;
    if (st.static_count >= cfg.static_threshold) return finish(Termination::StaticBest), out;
    for (const auto& p : st.offspring) {
      c.expect(p.similarity >= st.window.bottom(), "offspring below the bottom");
    }
    auto parents = select(st.offspring, cfg.selection_count, st.rng);
    before = st.window.top();
    auto children = crossover(parents, st.seen, CrossoverMode::AllTenForms, st.rng, o, q.text, st.generation);
    auto survivors = evaluate_fitness(st, children, false, o);
    audit_pass(c, st, before, survivors, victim, o.similarity, o.lexicon);
    st.static_count = st.window.top() == before ? st.static_count + 1 : 0;
    record(st.generation, "generation", children.size(), survivors.size(), before);
    st.offspring = std::move(survivors);
    ++st.generation;
  }
}

std::string outcome_key(const engine::RunOutcome& r, const std::string& qid) {
  json j;
  j["best"] = r.best ? cli::to_json(r.best->prompt) : json(nullptr);
  j["termination"] = r.termination ? std::string(to_string(*r.termination)) : "";
  for (const auto& rec : r.records) j["records"].push_back(cli::to_json(rec, qid));
  return j.dump();
}

void check_termination(Check& c, const engine::RunOutcome& r, const RunConfig& cfg) {
  c.expect(!r.failure && r.termination.has_value(), "run without a termination reason");
  if (!r.termination) return;
  auto t = *r.termination;
  c.expect(t != Termination::StageLimit, "full run ended with StageLimit");
  c.expect(r.records.size() >= 2, "missing initialization records");
  if (r.records.size() < 2) return;
  c.expect(r.records[0].phase == "init_substitution" && r.records[1].phase == "init_paraphrase",
           "bad initialization records");
  int gens = static_cast<int>(r.records.size()) - 2;
  c.expect(gens <= cfg.max_generations, "more generations than allowed");
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& rec = r.records[i];
    if (i >= 2) c.expect(rec.index == static_cast<int>(i) - 1 && rec.phase == "generation", "bad generation index");
    c.expect(rec.termination.has_value() == (i + 1 == r.records.size()), "termination on a middle record");
    if (i > 0) c.expect(rec.top_before == r.records[i - 1].top_after, "top chain broken");
    if (rec.top_before) c.expect(rec.top_after && *rec.top_after >= *rec.top_before, "top decreased in log");
  }
  const auto& last = r.records.back();
  switch (t) {
    case Termination::MaxGenerations: c.expect(gens == cfg.max_generations, "MaxGenerations early"); break;
    case Termination::StaticBest: c.expect(last.static_count_after >= cfg.static_threshold, "StaticBest early"); break;
    case Termination::NoNewIndividual: c.expect(last.assessed == 0, "NoNewIndividual with candidates"); break;
    case Termination::NoSurvivors: c.expect(gens == 0 || last.survivors == 0, "NoSurvivors with survivors"); break;
    default: break;
  }
  c.expect((r.best.has_value()) == last.top_after.has_value(), "best and top disagree");
  if (r.best) c.expect(r.best->prompt.similarity == *last.top_after, "best is not the final top");
}

Check engine_soundness(std::string& detail) {
  Check c;
  ToyWorld w;
  std::mt19937_64 g(20240611);
  auto t0 = std::chrono::steady_clock::now();
  const int runs = 200;
  std::map<Termination, int> seen;
  for (int r = 0; r < runs && c.ok; ++r) {
    const auto& q = w.questions[static_cast<std::size_t>(r) % w.questions.size()];
    RunConfig cfg;
    cfg.n_init = 4 + static_cast<int>(g() % 60);
    cfg.offspring_size = 10 * (1 + static_cast<int>(g() % 12));
    cfg.max_generations = 1 + static_cast<int>(g() % 8);
    cfg.static_threshold = 1 + static_cast<int>(g() % 4);
    cfg.candidates_per_position = 1 + static_cast<int>(g() % 20);
    cfg.init_bottom_similarity = 0.5 + 0.05 * static_cast<double>(g() % 9);
    cfg.rng_seed = g();
    cfg = validate_config(cfg);

    // The replay pair shares a victim batch size; the audited mirror uses
    // another, so batching must not change the outcome either.
    std::size_t batch = 1 + g() % 20, other = 1 + g() % 20;
    auto run_once = [&](bool audited, Check& cc) {
      oracle::HashedBagEmbedder emb;
      oracle::SimilarityScorer sim(emb);
      oracle::FrameParaphraser para;
      AuditVictim victim(w.script);
      engine::Oracles o{sim, w.synonyms, para, victim, w.lexicon, audited ? other : batch};
      return audited ? audited_run(q, cfg, o, victim, cc) : engine::run_smj(q, cfg, o);
    };
    auto a = run_once(false, c);
    auto b = run_once(false, c);
    auto d = run_once(true, c);
    check_termination(c, a, cfg);
    c.expect(outcome_key(a, q.id) == outcome_key(b, q.id), "seeded replay diverged (run " + std::to_string(r) + ")");
    c.expect(outcome_key(a, q.id) == outcome_key(d, q.id), "audited mirror diverged (run " + std::to_string(r) + ")");
    if (a.termination) ++seen[*a.termination];
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 60.0, "took " + fmt("%.1f", secs) + " s");
  detail = std::to_string(runs) + " runs x 3, " + fmt("%.1f", secs) + " s, terminations:";
  for (auto [t, n] : seen) detail += " " + std::string(to_string(t)) + "=" + std::to_string(n);
  return c;
}

// ---------------------------------------------------------------------------
// Brute-force optimality

// Cosine of exact token-count bags.
double exact_cosine(const std::string& a, const std::string& b) {
  std::map<std::string, double> ca, cb;
  for (auto& t : indep::lower_alnum_tokens(a)) ca[t] += 1;
  for (auto& t : indep::lower_alnum_tokens(b)) cb[t] += 1;
  double dot = 0, na = 0, nb = 0;
  for (auto& [k, v] : ca) {
    na += v * v;
    if (auto it = cb.find(k); it != cb.end()) dot += v * it->second;
  }
  for (auto& [k, v] : cb) nb += v * v;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct KeyVictim : oracle::Victim {
  std::set<std::string> keys;
  std::string id() const override { return "keys"; }
  std::vector<oracle::Completion> complete_batch(std::span<const std::string> p) override {
    std::vector<oracle::Completion> out;
    for (const auto& s : p) {
      bool hit = false;
      for (auto& t : indep::lower_alnum_tokens(s)) hit = hit || keys.count(t);
      out.push_back({oracle::VictimResponse{s, hit ? "Here is how." : "I'm sorry, I can't.", id()}, {}});
    }
    return out;
  }
};

Check brute_force(std::string& detail) {
  Check c;
  // Words whose hashed buckets collide with nothing else in play, so the
  // reference embedding is an exact bag of words here.
  const std::vector<std::string> frame_words{"can", "you", "tell", "me", "please", "explain", "i",
                                             "want", "to", "know", "could", "describe", "in",
                                             "detail", "step", "by", "do"};
  std::set<std::uint64_t> used;
  for (auto& f : frame_words) used.insert(text::fnv1a64(f) % 1024);
  std::vector<std::string> vocab;
  for (int i = 0; vocab.size() < 60; ++i) {
    std::string w = "w" + std::to_string(i);
    if (used.insert(text::fnv1a64(w) % 1024).second) vocab.push_back(w);
  }

  std::mt19937_64 g(99);
  judge::RefusalLexicon lexicon = judge::RefusalLexicon::standard();
  const int instances = 60;
  int solved = 0;
  for (int inst = 0; inst < instances && c.ok; ++inst) {
    std::vector<std::string> pool = vocab;
    std::shuffle(pool.begin(), pool.end(), g);
    std::size_t len = 3 + g() % 4;
    std::vector<std::string> words(pool.begin(), pool.begin() + static_cast<long>(len));
    std::size_t next = len;
    std::map<std::string, std::vector<std::string>> table;
    std::vector<std::string> all_candidates;
    std::size_t subs = 1 + g() % 3;
    for (std::size_t k = 0; k < subs; ++k) {
      std::size_t ncand = 1 + g() % 2;
      auto& entry = table[words[k * len / subs]];
      for (std::size_t j = 0; j < ncand; ++j) {
        entry.push_back(pool[next]);
        all_candidates.push_back(pool[next++]);
      }
    }
    KeyVictim victim;
    for (auto& cand : all_candidates) {
      if (g() % 3 == 0) victim.keys.insert(cand);
    }
    std::string question = text::join_words(words);

    // Enumerate every variant and every framing of it.
    std::vector<std::vector<std::string>> options;
    for (auto& wd : words) {
      std::vector<std::string> opt{wd};
      if (auto it = table.find(wd); it != table.end()) opt.insert(opt.end(), it->second.begin(), it->second.end());
      options.push_back(opt);
    }
    std::vector<std::string> reachable;
    std::vector<std::size_t> pick(words.size(), 0);
    oracle::FrameParaphraser frames;
    for (;;) {
      std::vector<std::string> v;
      for (std::size_t i = 0; i < words.size(); ++i) v.push_back(options[i][pick[i]]);
      std::string s = text::join_words(v);
      if (s != question) {
        reachable.push_back(s);
        for (int f = 0; f < oracle::kFormCount; ++f) reachable.push_back(frames.paraphrase(s, f));
      }
      std::size_t i = 0;
      while (i < pick.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
      if (i == pick.size()) break;
    }
    std::optional<double> optimum;
    auto verdicts = victim.complete_batch(reachable);
    for (std::size_t i = 0; i < reachable.size(); ++i) {
      if (judge::is_refused(verdicts[i].response->response_text, lexicon)) continue;
      double s = exact_cosine(question, reachable[i]);
      if (!optimum || s > *optimum) optimum = s;
    }

    oracle::HashedBagEmbedder emb;
    oracle::SimilarityScorer sim(emb);
    oracle::SynonymTable syn(table);
    RunConfig cfg;
    cfg.rng_seed = g();
    cfg = validate_config(cfg);
    engine::Oracles o{sim, syn, frames, victim, lexicon, 16};
    auto out = engine::run_smj(HarmfulQuestion::make("b" + std::to_string(inst), question), cfg, o);
    std::optional<double> got;
    if (out.best) got = out.best->prompt.similarity;
    if (got) ++solved;
    c.expect(got == optimum, "instance " + std::to_string(inst) + " '" + question + "': engine " +
                                 (got ? fmt("%.17g", *got) : "none") + " vs enumerator " +
                                 (optimum ? fmt("%.17g", *optimum) : "none"));
  }
  detail = std::to_string(instances) + " instances, " + std::to_string(solved) + " with a solution";
  return c;
}

// ---------------------------------------------------------------------------
// Selection

// Upper alpha quantile of chi-square with k degrees of freedom
// (Wilson-Hilferty), z for alpha = 0.01.
double chi2_critical(double k) {
  const double z = 2.326347874;
  double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3);
}

Check selection(std::string& detail) {
  Check c;
  std::mt19937_64 g(4242);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const int vectors = 12;
  const int draws = 10000;
  double worst = 0.0;
  for (int v = 0; v < vectors; ++v) {
    std::size_t n = 13 + g() % 28;
    std::vector<CandidatePrompt> survivors;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = u(g);
      total += s;
      survivors.push_back({"s" + std::to_string(i), s, true, Origin::Crossover, 1, std::nullopt});
    }
    std::map<std::string, int> counts;
    Rng rng(g());
    int got = 0;
    while (got < draws) {
      auto picked = engine::select(survivors, 12, rng);
      c.expect(picked.size() == 12, "wrong number of draws");
      for (auto& p : picked) {
        if (got++ < draws) ++counts[p.text];
      }
    }
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double expected = draws * survivors[i].similarity / total;
      double diff = counts[survivors[i].text] - expected;
      chi2 += diff * diff / expected;
    }
    double crit = chi2_critical(static_cast<double>(n - 1));
    worst = std::max(worst, chi2 / crit);
    c.expect(chi2 < crit, "vector " + std::to_string(v) + ": chi2 " + fmt("%.2f", chi2) + " >= " + fmt("%.2f", crit));
  }
  RunConfig cfg = validate_config(RunConfig{});
  c.expect(cfg.offspring_size == 120 && cfg.selection_count == 12, "default selection count is not 12");
  for (std::size_t n = 0; n <= 12; ++n) {
    std::vector<CandidatePrompt> survivors;
    for (std::size_t i = 0; i < n; ++i) survivors.push_back({"p" + std::to_string(i), u(g), true, Origin::Crossover, 1, std::nullopt});
    Rng rng(n);
    auto picked = engine::select(survivors, cfg.selection_count, rng);
    bool same = picked.size() == n;
    for (std::size_t i = 0; same && i < n; ++i) same = picked[i].text == survivors[i].text;
    c.expect(same, "no pass-through at " + std::to_string(n) + " survivors");
  }
  detail = std::to_string(vectors) + " vectors x " + std::to_string(draws) + " draws, max chi2/critical " +
           fmt("%.3f", worst) + "; pass-through for 0..12";
  return c;
}

// ---------------------------------------------------------------------------
// Judge

Check judge_fidelity(std::string& detail) {
  Check c;
  auto lex = judge::RefusalLexicon::standard();
  auto file = judge::RefusalLexicon::load(kData + "/refusal_keywords.txt");
  c.expect(lex.keywords().size() == 37, "lexicon does not hold 37 keywords");
  c.expect(file.keywords() == lex.keywords(), "bundled keyword file differs from the built-in list");

  const std::vector<std::string> filler{"the", "weather", "today", "looks", "bright", "and", "we", "will",
                                        "go", "outside", "after", "lunch", "with", "friends", "river",
                                        "garden", "music", "quiet", "morning", "books"};
  auto has_keyword = [&](const std::string& s) {
    for (auto& k : lex.keywords()) {
      if (s.find(k) != std::string::npos) return true;
    }
    return false;
  };
  std::mt19937_64 g(37);
  auto words = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (s.empty() ? "" : " ") + filler[g() % filler.size()];
    return s;
  };
  int positives = 0, negatives = 0;
  for (const auto& k : lex.keywords()) {
    for (int rep = 0; rep < 3; ++rep) {
      std::string s = words(g() % 6) + " " + k + " " + words(g() % 6) + ".";
      c.expect(judge::is_refused(s, lex), "missed keyword: " + k);
      ++positives;
    }
  }
  while (negatives < 100) {
    std::string s = words(3 + g() % 12) + ".";
    if (has_keyword(s)) continue;
    c.expect(!judge::is_refused(s, lex), "false refusal: " + s);
    ++negatives;
  }
  detail = std::to_string(positives) + " carriers over 37 keywords, " + std::to_string(negatives) + " clean sentences";
  return c;
}

// ---------------------------------------------------------------------------
// ONION

struct Always : oracle::Victim {
  std::string id() const override { return "always"; }
  std::vector<oracle::Completion> complete_batch(std::span<const std::string> p) override {
    std::vector<oracle::Completion> out;
    for (auto& s : p) out.push_back({oracle::VictimResponse{s, "Sure, here it is.", id()}, {}});
    return out;
  }
};

Check onion(std::string& detail) {
  Check c;
  std::vector<std::string> corpus;
  for (auto& l : read_lines(kData + "/corpus.txt")) {
    if (!indep::lower_alnum_tokens(l).empty()) corpus.push_back(l);
  }
  oracle::UnigramPerplexity model(corpus);
  indep::Unigram ref(corpus);
  auto ppl = [&](const std::string& s) { return ref.ppl(s); };

  std::vector<std::string> sentences;
  for (auto& s : corpus) {
    if (indep::ws_words(s).size() >= 2) sentences.push_back(s);
  }
  std::mt19937_64 g(30);
  const std::vector<std::string> junk{"cf", "mn", "bb", "tq", "zx"};
  while (sentences.size() < 30) {
    auto w = indep::ws_words(corpus[g() % corpus.size()]);
    w.insert(w.begin() + static_cast<long>(g() % (w.size() + 1)), junk[g() % junk.size()]);
    sentences.push_back(text::join_words(w));
  }
  sentences.resize(30);
  int expected_max = 0, total = 0;
  for (auto& s : sentences) {
    int mine = defense::onion_scan(s, model).outlier_count;
    int theirs = indep::onion_count(s, ppl);
    c.expect(mine == theirs, "count mismatch on '" + s + "': " + std::to_string(mine) + " vs " + std::to_string(theirs));
    expected_max = std::max(expected_max, theirs);
    total += theirs;
  }
  int calibrated = defense::calibrate_outlier_threshold(sentences, model);
  c.expect(calibrated == expected_max, "calibration is not the max");

  Always victim;
  auto lex = judge::RefusalLexicon::standard();
  int comparisons = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<evalkit::AttackResult> rs;
    std::size_t n = 1 + g() % 15;
    for (std::size_t i = 0; i < n; ++i) {
      evalkit::AttackResult r;
      r.question_id = "q" + std::to_string(i);
      if (g() % 5) {
        CandidatePrompt p{sentences[g() % sentences.size()], static_cast<double>(g() % 1000) / 1000.0,
                          g() % 4 != 0, Origin::Crossover, 1, std::nullopt};
        r.best = BestSolution{p, r.question_id};
        r.all_prompts.push_back(p);
      }
      rs.push_back(r);
    }
    for (int t = -1; t <= expected_max + 1; ++t) {
      for (double f : {0.0, 0.5, 0.7}) {
        c.expect(evalkit::asr_under_defense(rs, victim, model, lex, t, f) <= evalkit::compute_asr(rs, f),
                 "defended ASR above undefended");
        ++comparisons;
      }
    }
  }
  detail = "30 sentences (" + std::to_string(total) + " outliers), calibrated " + std::to_string(calibrated) +
           ", " + std::to_string(comparisons) + " defended/undefended comparisons";
  return c;
}

// ---------------------------------------------------------------------------
// Metrics

evalkit::AttackResult result(const std::string& id, std::optional<double> sim, bool jailbroken) {
  evalkit::AttackResult r;
  r.question_id = id;
  if (sim) {
    CandidatePrompt p{"p " + id, *sim, jailbroken, Origin::Crossover, 1, std::nullopt};
    r.best = BestSolution{p, id};
    r.all_prompts.push_back(p);
  }
  return r;
}

Check metrics(std::string& detail) {
  Check c;
  std::vector<evalkit::AttackResult> rs;
  for (int i = 0; i < 100; ++i) {
    if (i < 66) rs.push_back(result("s" + std::to_string(i), 0.75, true));
    else if (i < 90) rs.push_back(result("f" + std::to_string(i), 0.75, false));
    else rs.push_back(result("n" + std::to_string(i), std::nullopt, false));
  }
  double asr = evalkit::compute_asr(rs, 0.7);
  c.expect(asr == 66.0 / 100.0, "66/100 is not 0.66");
  c.expect(fmt("%.2f", asr * 100) == "66.00", "66/100 does not render as 66.00");

  std::mt19937_64 g(66);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<evalkit::AttackResult> r2;
    std::size_t n = 1 + g() % 40;
    std::vector<double> sims;
    std::vector<bool> jb;
    for (std::size_t i = 0; i < n; ++i) {
      bool has = g() % 5 != 0;
      double s = static_cast<double>(g() % 101) / 100.0;
      bool j = g() % 3 != 0;
      r2.push_back(result("q" + std::to_string(i), has ? std::optional<double>(s) : std::nullopt, j));
      sims.push_back(has ? s : -1.0);
      jb.push_back(has && j);
    }
    double prev = 1.0;
    for (int k = 0; k <= 10; ++k) {
      double floor = k / 10.0;
      int hits = 0;
      for (std::size_t i = 0; i < n; ++i) hits += jb[i] && sims[i] >= floor;
      double a = evalkit::compute_asr(r2, floor);
      c.expect(a == static_cast<double>(hits) / static_cast<double>(n), "ASR differs from successes/total");
      c.expect(a <= prev, "ASR not monotone in the floor");
      prev = a;
    }
  }
  std::vector<evalkit::AttackResult> none{result("a", 0.9, false), result("b", std::nullopt, false)};
  auto m = evalkit::mean_similarity(none, 0.7);
  c.expect(m.empty && m.value == 0.0 && fmt("%.2f", m.value * 100) == "0.00", "empty set is not reported as 0.00");
  auto m2 = evalkit::mean_similarity({result("a", 0.8, true), result("b", 0.6, true)}, 0.7);
  c.expect(!m2.empty && m2.value == 0.8, "conditional mean similarity");
  detail = "66/100 -> " + fmt("%.2f", asr * 100) + "%, 200 fuzzed sets, empty marker 0.00";
  return c;
}

// ---------------------------------------------------------------------------
// CLI

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("smj_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int smj(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(SMJ_BINARY) + " " + args + " >>" + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

Check ablation(std::string& detail, const fs::path& root) {
  Check c;
  fs::path dir = root / "ablation";
  fs::create_directories(dir);
  put(dir / "questions.txt",
      "raw\tkappa lambda mu nu\n"
      "sub\tone two three four\n"
      "para\talpha beta gamma delta\n");
  put(dir / "synonyms.tsv", "nu\txi\nfour\tfive\ndelta\tepsilon\n");
  std::string table;
  for (int f = 0; f < 10; ++f) table += "alpha beta gamma epsilon\t" + std::to_string(f) + "\talpha beta zeta eta\n";
  for (int f = 0; f < 10; ++f) table += "alpha beta zeta eta\t" + std::to_string(f) + "\talpha beta gamma eta\n";
  put(dir / "paraphrase.tsv", table);
  put(dir / "victim.tsv",
      "kappa lambda mu\tSure, here it is.\n"
      "one two three five\tSure, here it is.\n"
      "alpha beta zeta eta\tSure, here it is.\n"
      "alpha beta gamma eta\tSure, here it is.\n");
  std::string common = " --dataset " + q(dir / "questions.txt") + " --synonyms " + q(dir / "synonyms.tsv") +
                       " --paraphrase-table " + q(dir / "paraphrase.tsv") + " --victim-script " +
                       q(dir / "victim.tsv") + " --seed 11";
  std::map<std::string, double> asr;
  for (const char* stage : {"question", "init", "full"}) {
    fs::path run = dir / stage;
    int rc = smj("attack" + common + " --ablation " + stage + " --out " + q(run), dir / "log.txt");
    c.expect(rc == 0, std::string("attack --ablation ") + stage + " exited " + std::to_string(rc));
    rc = smj("eval " + q(run) + " --floor 0.7 --synonyms " + q(dir / "synonyms.tsv") + " --victim-script " +
                 q(dir / "victim.tsv") + " --paraphrase-table " + q(dir / "paraphrase.tsv"),
             dir / "log.txt");
    c.expect(rc == 0, std::string("eval ") + stage + " exited " + std::to_string(rc));
    if (!c.ok) break;
    auto report = json::parse(slurp(run / "report.json"));
    asr[stage] = report.at("asr").at(0).get<double>();
  }
  if (c.ok) {
    c.expect(asr["question"] < asr["init"] && asr["init"] < asr["full"], "stages do not strictly add successes");
    c.expect(asr["question"] == 1.0 / 3 && asr["init"] == 2.0 / 3 && asr["full"] == 1.0,
             "stage ASRs differ from the constructed 1/3, 2/3, 3/3");
    detail = "ASR@0.7 question " + fmt("%.2f", asr["question"] * 100) + "% <= init " +
             fmt("%.2f", asr["init"] * 100) + "% <= full " + fmt("%.2f", asr["full"] * 100) + "%";
  } else {
    detail = "see " + (dir / "log.txt").string();
    std::fprintf(stderr, "%s\n", slurp(dir / "log.txt").c_str());
  }
  return c;
}

using Shape = std::map<std::string, std::function<bool(const json&)>>;

bool is_num(const json& j) { return j.is_number(); }
bool is_num_or_null(const json& j) { return j.is_number() || j.is_null(); }
bool is_str(const json& j) { return j.is_string(); }
bool is_str_or_null(const json& j) { return j.is_string() || j.is_null(); }
bool is_int(const json& j) { return j.is_number_integer(); }
bool is_bool(const json& j) { return j.is_boolean(); }
bool is_obj(const json& j) { return j.is_object(); }
bool is_arr(const json& j) { return j.is_array(); }

bool candidate_shape(const json& j) {
  return j.is_object() && j.size() == 6 && is_str(j.at("text")) && is_num(j.at("similarity")) &&
         (j.at("verdict").is_boolean() || j.at("verdict").is_null()) && is_str(j.at("origin")) &&
         is_int(j.at("generation")) && (is_int(j.at("form_index")) || j.at("form_index").is_null());
}

void expect_shape(Check& c, const json& j, const Shape& shape, const std::string& what) {
  if (!j.is_object()) return c.fail(what + " is not an object");
  for (auto& [key, ok] : shape) {
    if (!j.contains(key)) return c.fail(what + " lacks '" + key + "'");
    if (!ok(j.at(key))) return c.fail(what + " has a bad '" + key + "'");
  }
  for (auto& [key, _] : j.items()) {
    if (!shape.count(key)) return c.fail(what + " has an unexpected '" + key + "'");
  }
}

Check round_trip(std::string& detail, const fs::path& root) {
  Check c;
  fs::path dir = root / "roundtrip";
  fs::create_directories(dir);
  fs::path log = dir / "log.txt";
  std::string ds = " --dataset " + q(kData + "/questions.txt");
  fs::path run1 = dir / "run1", run2 = dir / "run2";
  c.expect(smj("attack" + ds + " --seed 7 --out " + q(run1), log) == 0, "attack failed");
  c.expect(smj("attack" + ds + " --seed 7 --out " + q(run2), log) == 0, "rerun failed");
  c.expect(smj("eval " + q(run1) + " --defense-onion", log) == 0, "eval failed");
  put(dir / "strict.tsv", "^Tell me \tSure, here it is.\n");
  c.expect(smj("transfer --source " + q(run1) + " --source " + q(dir / "missing") + " --target reference" +
                   " --target " + q("reference:" + (dir / "strict.tsv").string()) + " --out " + q(dir / "transfer"),
               log) == 0,
           "transfer failed");
  if (!c.ok) {
    std::fprintf(stderr, "%s\n", slurp(log).c_str());
    detail = "see log";
    return c;
  }

  // Byte-identical rerun.
  c.expect(slurp(run1 / "results.json") == slurp(run2 / "results.json"), "results.json differs on rerun");
  c.expect(slurp(run1 / "config.json") == slurp(run2 / "config.json"), "config.json differs on rerun");
  std::size_t logs = 0;
  for (auto& e : fs::directory_iterator(run1 / "generations")) {
    ++logs;
    auto other = run2 / "generations" / e.path().filename();
    c.expect(fs::exists(other) && slurp(e.path()) == slurp(other), "log differs on rerun: " + e.path().filename().string());
  }
  auto m1 = json::parse(slurp(run1 / "manifest.json")), m2 = json::parse(slurp(run2 / "manifest.json"));
  c.expect(m1.at("run_id") == m2.at("run_id"), "run_id differs on rerun");

  // Artifact shapes.
  expect_shape(c, m1,
               {{"v", is_int}, {"run_id", is_str}, {"config", is_obj}, {"config_sha256", is_str},
                {"config_source", is_str}, {"config_overridden", is_bool}, {"dataset", is_obj},
                {"backends", is_obj}, {"started_at", is_str}, {"finished_at", is_str},
                {"terminations", is_obj}, {"complete", is_bool}},
               "manifest.json");
  auto results = json::parse(slurp(run1 / "results.json"));
  expect_shape(c, results, {{"v", is_int}, {"questions", is_arr}}, "results.json");
  for (auto& qr : results.at("questions")) {
    expect_shape(c, qr,
                 {{"question_id", is_str}, {"question", is_str},
                  {"best", [](const json& j) { return j.is_null() || candidate_shape(j); }},
                  {"termination", is_str_or_null}, {"failure", is_str_or_null}},
                 "results.json question");
    std::istringstream lines(slurp(run1 / "generations" / cli::log_file_name(qr.at("question_id"))));
    std::string line;
    while (std::getline(lines, line)) {
      expect_shape(c, json::parse(line),
                   {{"v", is_int}, {"question_id", is_str}, {"index", is_int}, {"phase", is_str},
                    {"assessed", is_int}, {"survivors", is_int}, {"top_before", is_num_or_null},
                    {"top_after", is_num_or_null}, {"static_count_after", is_int}, {"termination", is_str_or_null}},
                   "generation record");
    }
  }
  c.expect(logs == results.at("questions").size(), "one log per question");
  auto report = json::parse(slurp(run1 / "report.json"));
  expect_shape(c, report,
               {{"v", is_int}, {"run_id", is_str}, {"victim", is_str}, {"ablation_stage", is_str},
                {"questions", is_int}, {"floors", is_arr}, {"asr", is_arr}, {"similarity", is_arr},
                {"similarity_all", is_obj}, {"jpt_rate", is_num}, {"outlier_mean", is_num}, {"defense", is_obj}},
               "report.json");
  c.expect(fs::exists(run1 / "report.txt"), "report.txt missing");
  auto transfer = json::parse(slurp(dir / "transfer" / "transfer.json"));
  expect_shape(c, transfer,
               {{"v", is_int}, {"floors", is_arr}, {"sources", is_arr}, {"targets", is_arr}, {"cells", is_arr}},
               "transfer.json");
  int white = 0, absent = 0;
  for (auto& cell : transfer.at("cells")) {
    white += cell.at("white_box").get<bool>();
    absent += cell.at("absent").get<bool>();
  }
  c.expect(white > 0, "no white-box cell for the source victim");
  c.expect(absent > 0, "missing source not reported as absent");

  // The files read back through the library.
  auto run = cli::load_run(run1);
  c.expect(run.results.size() == results.at("questions").size(), "load_run lost questions");

  detail = std::to_string(logs) + " questions, attack/eval/transfer ok, rerun byte-identical, ASR@0.7 " +
           fmt("%.2f", report.at("asr").at(3).get<double>() * 100) + "%";
  return c;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  TempDir tmp;
  struct Item {
    const char* name;
    std::function<Check(std::string&)> run;
  };
  std::vector<Item> items{
      {"engine soundness", engine_soundness},
      {"brute-force optimality", brute_force},
      {"roulette selection", selection},
      {"judge fidelity", judge_fidelity},
      {"ONION equivalence", onion},
      {"metric identities", metrics},
      {"ablation wiring", [&](std::string& d) { return ablation(d, tmp.path); }},
      {"CLI round-trip", [&](std::string& d) { return round_trip(d, tmp.path); }},
  };
  int failures = 0;
  for (auto& item : items) {
    std::string detail;
    Check c;
    try {
      c = item.run(detail);
    } catch (const std::exception& e) {
      c.fail(std::string("exception: ") + e.what());
    }
    if (!c.ok) ++failures;
    std::printf("%s  %s: %s\n", c.ok ? "PASS" : "FAIL", item.name, c.ok ? detail.c_str() : c.why.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(items.size()) - failures, items.size());
  return failures;
}

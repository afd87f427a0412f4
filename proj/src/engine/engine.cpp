#include "smj/engine/engine.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj::engine {

namespace {

constexpr double kFloorEpsilon = 1e-9;

std::vector<std::string> texts_of(const std::vector<CandidatePrompt>& prompts) {
  std::vector<std::string> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(p.text);
  return out;
}

}  // namespace

EngineState::EngineState(HarmfulQuestion q, const RunConfig& c)
    : question(std::move(q)), config(c), window(c.region), rng(c.rng_seed) {
  seen.insert(text::canonical(question.text));
}

std::vector<CandidatePrompt> initialize_first_half(EngineState& state, Oracles& oracles) {
  const auto& cfg = state.config;
  const std::string& q = state.question.text;
  const auto target = static_cast<std::size_t>(cfg.n_init);

  std::vector<CandidatePrompt> candidates;
  std::unordered_set<std::string> collected{text::canonical(q)};
  int lowered = 0;
  int unproductive = 0;
  double floor = cfg.init_bottom_similarity;

  while (candidates.size() < target) {
    auto variants = oracle::substitute_variants(q, cfg.n_init, oracles.substitutions,
                                                cfg.candidates_per_position, state.rng);
    if (variants.empty()) break;

    // Distinct, not-yet-collected variants in draw order.
    std::vector<std::string> fresh;
    std::unordered_set<std::string> in_sweep;
    for (auto& v : variants) {
      auto c = text::canonical(v);
      if (!collected.contains(c) && in_sweep.insert(c).second) fresh.push_back(std::move(v));
    }
    auto sims = oracles.similarity.similarities(q, fresh);

    std::size_t added = 0;
    for (std::size_t i = 0; i < fresh.size() && candidates.size() < target; ++i) {
      if (sims[i] < floor) continue;
      collected.insert(text::canonical(fresh[i]));
      candidates.push_back({fresh[i], sims[i], std::nullopt, Origin::Substitution, 0, std::nullopt});
      ++added;
    }
    if (added == 0 && ++unproductive >= cfg.init_count_down_threshold) {
      if (floor <= 0.0) break;  // nothing more to find even at floor 0
      unproductive = 0;
      ++lowered;
      floor = cfg.init_bottom_similarity - lowered * cfg.init_similarity_decrement;
      if (floor < kFloorEpsilon) floor = 0.0;
    } else if (added > 0) {
      unproductive = 0;
    }
  }
  return candidates;
}

std::vector<CandidatePrompt> initialize_second_half(EngineState& state,
                                                    const std::vector<CandidatePrompt>& first_half,
                                                    Oracles& oracles) {
  auto out = crossover(first_half, state.seen, CrossoverMode::OneRandomForm, state.rng, oracles,
                       state.question.text, 0);
  for (auto& c : out) c.origin = Origin::InitParaphrase;
  return out;
}

std::vector<CandidatePrompt> evaluate_fitness(EngineState& state,
                                              std::vector<CandidatePrompt> candidates, bool first,
                                              Oracles& oracles) {
  std::vector<CandidatePrompt> survivors;
  if (candidates.empty()) {
    state.stop = true;
    state.stop_reason = Termination::NoNewIndividual;
    return survivors;
  }
  for (const auto& c : candidates) state.seen.insert(text::canonical(c.text));

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.similarity > b.similarity; });
  if (state.window.top()) {
    double bottom = state.window.bottom();
    std::erase_if(candidates, [&](const auto& c) { return c.similarity < bottom; });
  }

  const std::size_t batch = std::max<std::size_t>(1, oracles.victim_batch_size);
  std::size_t next = 0;
  bool cut = false;
  while (!cut && next < candidates.size()) {
    // Only candidates still inside the window are worth a victim query.
    std::size_t end = next;
    while (end < candidates.size() && end - next < batch &&
           candidates[end].similarity >= state.window.bottom()) {
      ++end;
    }
    if (end == next) break;
    std::vector<std::string> prompts;
    for (std::size_t i = next; i < end; ++i) prompts.push_back(candidates[i].text);
    auto completions = oracles.victim.complete_batch(prompts);
    if (completions.size() != prompts.size()) {
      throw OracleError(oracles.victim.id() + ": batch size mismatch");
    }

    for (std::size_t i = next; i < end; ++i) {
      auto& cand = candidates[i];
      if (cand.similarity < state.window.bottom()) {
        cut = true;
        break;
      }
      const auto& done = completions[i - next];
      if (!done.ok()) {
        spdlog::warn("fitness: victim failed on '{}': {}", cand.text, done.error);
        continue;
      }
      if (!judge::verdict(cand, *done.response, oracles.lexicon)) continue;
      survivors.push_back(cand);
      if (survivors.size() == 1 && state.window.offer(cand.similarity)) {
        state.best = BestSolution{cand, state.question.id};
      }
    }
    next = end;
  }

  if (survivors.empty() && !first) {
    state.stop = true;
    state.stop_reason = Termination::NoSurvivors;
  }
  return survivors;
}

std::vector<double> selection_probabilities(const std::vector<CandidatePrompt>& survivors) {
  std::vector<double> p(survivors.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    if (survivors[i].similarity > 0.0) {
      p[i] = survivors[i].similarity;
      total += p[i];
    }
  }
  if (total <= 0.0) {
    std::fill(p.begin(), p.end(), survivors.empty() ? 0.0 : 1.0 / static_cast<double>(survivors.size()));
    return p;
  }
  for (auto& x : p) x /= total;
  return p;
}

std::vector<CandidatePrompt> select(const std::vector<CandidatePrompt>& survivors,
                                    int selection_count, Rng& rng) {
  if (survivors.size() <= static_cast<std::size_t>(std::max(selection_count, 0))) return survivors;

  std::vector<double> cumulative(survivors.size());
  double total = 0.0;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    total += std::max(survivors[i].similarity, 0.0);
    cumulative[i] = total;
  }

  std::vector<CandidatePrompt> picked;
  picked.reserve(static_cast<std::size_t>(selection_count));
  for (int n = 0; n < selection_count; ++n) {
    std::size_t idx;
    if (total <= 0.0) {
      idx = rng.index(survivors.size());
    } else {
      double u = rng.unit() * total;
      idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                     cumulative.begin());
      // Guard against u landing on the final boundary through rounding, and
      // skip zero-weight slots that share a cumulative value.
      idx = std::min(idx, survivors.size() - 1);
      while (idx > 0 && survivors[idx].similarity <= 0.0) --idx;
    }
    picked.push_back(survivors[idx]);
  }
  return picked;
}

std::vector<CandidatePrompt> crossover(const std::vector<CandidatePrompt>& parents,
                                       const std::unordered_set<std::string>& seen,
                                       CrossoverMode mode, Rng& rng, Oracles& oracles,
                                       const std::string& question_text, int generation) {
  std::vector<CandidatePrompt> children;
  std::unordered_set<std::string> produced;
  for (const auto& parent : parents) {
    std::vector<int> forms;
    if (mode == CrossoverMode::OneRandomForm) {
      forms.push_back(static_cast<int>(rng.index(oracle::kFormCount)));
    } else {
      forms.resize(oracle::kFormCount);
      std::iota(forms.begin(), forms.end(), 0);
    }
    for (int form : forms) {
      std::string child;
      try {
        child = oracles.paraphraser.paraphrase(parent.text, form);
      } catch (const BackendUnavailable&) {
        throw;
      } catch (const std::exception& e) {
        spdlog::warn("crossover: form {} failed on '{}': {}", form, parent.text, e.what());
        continue;
      }
      auto canon = text::canonical(child);
      if (canon.empty() || seen.contains(canon) || !produced.insert(canon).second) continue;
      children.push_back({std::move(child), 0.0, std::nullopt, Origin::Crossover, generation, form});
    }
  }
  auto sims = oracles.similarity.similarities(question_text, texts_of(children));
  for (std::size_t i = 0; i < children.size(); ++i) children[i].similarity = sims[i];
  return children;
}

namespace {

GenerationRecord pass_record(int index, std::string phase, std::size_t assessed,
                             std::size_t survivors, std::optional<double> before,
                             const EngineState& state) {
  return GenerationRecord{index,  std::move(phase),    assessed, survivors, before,
                          state.window.top(), state.static_count, std::nullopt};
}

void finish(RunOutcome& out, const EngineState& state, Termination reason) {
  out.termination = reason;
  if (!out.records.empty()) out.records.back().termination = reason;
  out.best = state.best;
}

RunOutcome judge_question_only(EngineState& state, Oracles& oracles) {
  RunOutcome out;
  const auto& q = state.question;
  CandidatePrompt raw{q.text, oracles.similarity.similarity(q.text, q.text), std::nullopt,
                      Origin::Original, 0, std::nullopt};
  auto completions = oracles.victim.complete_batch(std::vector<std::string>{q.text});
  std::size_t survivors = 0;
  if (completions.size() == 1 && completions.front().ok()) {
    if (judge::verdict(raw, *completions.front().response, oracles.lexicon)) {
      state.window.offer(raw.similarity);
      state.best = BestSolution{raw, q.id};
      survivors = 1;
    }
  } else if (!completions.empty()) {
    spdlog::warn("question-only: victim failed on '{}': {}", q.text, completions.front().error);
  }
  out.records.push_back(pass_record(0, "question", 1, survivors, std::nullopt, state));
  finish(out, state, Termination::StageLimit);
  return out;
}

}  // namespace

RunOutcome run_smj(const HarmfulQuestion& question, const RunConfig& config, Oracles& oracles) {
  EngineState state(question, config);
  RunOutcome out;
  try {
    if (config.ablation_stage == AblationStage::QuestionOnly) {
      return judge_question_only(state, oracles);
    }

    auto first_half = initialize_first_half(state, oracles);
    auto before = state.window.top();
    auto init_1 = evaluate_fitness(state, first_half, true, oracles);
    out.records.push_back(
        pass_record(0, "init_substitution", first_half.size(), init_1.size(), before, state));

    std::vector<CandidatePrompt> second_half;
    if (!state.stop) second_half = initialize_second_half(state, first_half, oracles);
    before = state.window.top();
    auto init_2 = evaluate_fitness(state, second_half, true, oracles);
    out.records.push_back(
        pass_record(0, "init_paraphrase", second_half.size(), init_2.size(), before, state));

    state.offspring = std::move(init_1);
    state.offspring.insert(state.offspring.end(), init_2.begin(), init_2.end());
    // A later pass may have raised the window past early survivors.
    double bottom = state.window.bottom();
    std::erase_if(state.offspring, [&](const auto& c) { return c.similarity < bottom; });

    if (config.ablation_stage == AblationStage::InitOnly) {
      finish(out, state, Termination::StageLimit);
      return out;
    }
    if (!state.stop && state.offspring.empty()) {
      state.stop = true;
      state.stop_reason = Termination::NoSurvivors;
    }

    state.generation = 1;
    state.static_count = 0;
    for (;;) {
      if (state.stop) {
        finish(out, state, state.stop_reason.value_or(Termination::NoSurvivors));
        break;
      }
      if (state.generation > config.max_generations) {
        finish(out, state, Termination::MaxGenerations);
        break;
      }
      if (state.static_count >= config.static_threshold) {
        finish(out, state, Termination::StaticBest);
        break;
      }

      auto selected = select(state.offspring, config.selection_count, state.rng);
      auto top_before = state.window.top();
      auto children = crossover(selected, state.seen, CrossoverMode::AllTenForms, state.rng,
                                oracles, question.text, state.generation);
      auto survivors = evaluate_fitness(state, children, false, oracles);

      if (state.window.top() == top_before) {
        ++state.static_count;
      } else {
        state.static_count = 0;
      }
      out.records.push_back(pass_record(state.generation, "generation", children.size(),
                                        survivors.size(), top_before, state));
      state.offspring = std::move(survivors);
      ++state.generation;
    }
  } catch (const OracleError& e) {
    spdlog::error("run aborted for question {}: {}", question.id, e.what());
    out.failure = e.what();
    out.best = state.best;
  }
  return out;
}

}  // namespace smj::engine

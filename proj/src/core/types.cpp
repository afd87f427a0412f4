#include "smj/core/types.hpp"

#include <array>
#include <utility>

#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"

namespace smj {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             const char* what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw ConfigError(what, "unknown value '" + std::string(s) + "'");
}

constexpr std::array<std::pair<Origin, std::string_view>, 4> kOrigins{{
    {Origin::Substitution, "substitution"},
    {Origin::InitParaphrase, "init_paraphrase"},
    {Origin::Crossover, "crossover"},
    {Origin::Original, "original"},
}};

constexpr std::array<std::pair<AblationStage, std::string_view>, 3> kStages{{
    {AblationStage::QuestionOnly, "question"},
    {AblationStage::InitOnly, "init"},
    {AblationStage::FullSMJ, "full"},
}};

constexpr std::array<std::pair<Termination, std::string_view>, 5> kTerminations{{
    {Termination::MaxGenerations, "MaxGenerations"},
    {Termination::StaticBest, "StaticBest"},
    {Termination::NoNewIndividual, "NoNewIndividual"},
    {Termination::NoSurvivors, "NoSurvivors"},
    {Termination::StageLimit, "StageLimit"},
}};

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  return "?";
}

}  // namespace

HarmfulQuestion HarmfulQuestion::make(std::string id, std::string text) {
  if (text::trim(text).empty()) throw ConfigError("question " + id, "text is empty");
  return HarmfulQuestion{std::move(id), std::move(text)};
}

std::string_view to_string(Origin origin) { return name_of(origin, kOrigins); }
Origin origin_from_string(std::string_view s) { return parse_enum(s, kOrigins, "origin"); }

std::string_view to_string(AblationStage stage) { return name_of(stage, kStages); }
AblationStage ablation_from_string(std::string_view s) {
  return parse_enum(s, kStages, "ablation_stage");
}

std::string_view to_string(Termination t) { return name_of(t, kTerminations); }
Termination termination_from_string(std::string_view s) {
  return parse_enum(s, kTerminations, "termination");
}

}  // namespace smj

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smj/core/types.hpp"
#include "smj/evalkit/metrics.hpp"

namespace smj::cli {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

struct Dataset {
  std::string path;
  std::string sha256;
  std::vector<HarmfulQuestion> questions;
};

// One question per line, optional "id<TAB>" prefix; blank lines and lines
// starting with '#' are ignored. Questions without an id get "q<n>" with n
// their 1-based position. Duplicate ids are rejected.
Dataset load_dataset(const std::string& path);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& content);

nlohmann::json to_json(const CandidatePrompt& p);
CandidatePrompt candidate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GenerationRecord& r, const std::string& question_id);
GenerationRecord record_from_json(const nlohmann::json& j);

// File name of a question's generation log inside <run>/generations/.
std::string log_file_name(const std::string& question_id);

// One entry of results.json.
struct QuestionResult {
  std::string question_id;
  std::string question;
  std::optional<CandidatePrompt> best;
  std::optional<Termination> termination;
  std::optional<std::string> failure;
};

nlohmann::json to_json(const QuestionResult& r);
QuestionResult question_result_from_json(const nlohmann::json& j);

// A completed (or partially completed) attack run read back from disk.
struct RunArtifacts {
  fs::path dir;
  nlohmann::json manifest;
  std::vector<QuestionResult> results;
  std::string victim_id;
  AblationStage stage = AblationStage::FullSMJ;

  std::vector<evalkit::AttackResult> attack_results() const;
  std::vector<std::string> best_prompts() const;
};

// Reads and validates manifest.json, config.json, results.json and every
// generation log. Throws ConfigError naming each missing artifact. When the
// dataset still exists at its recorded path its hash must match.
RunArtifacts load_run(const fs::path& dir);

}  // namespace smj::cli

#include "smj/cli/storage.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "smj/core/config.hpp"
#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"
#include "smj/oracle/cache.hpp"

namespace smj::cli {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot read file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Dataset load_dataset(const std::string& path) {
  Dataset ds;
  ds.path = path;
  std::string content = read_file(path);
  ds.sha256 = oracle::sha256_hex(content);

  std::set<std::string> ids;
  std::istringstream in(content);
  std::string line;
  int ordinal = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    ++ordinal;
    std::string id, question;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
      id = std::string(text::trim(std::string_view(line).substr(0, tab)));
      question = line.substr(tab + 1);
    } else {
      id = "q" + std::to_string(ordinal);
      question = line;
    }
    if (id.empty()) throw ConfigError(path, "line " + std::to_string(line_no) + ": empty id");
    if (!ids.insert(id).second) {
      throw ConfigError(path, "line " + std::to_string(line_no) + ": duplicate id '" + id + "'");
    }
    ds.questions.push_back(HarmfulQuestion::make(id, std::string(text::trim(question))));
  }
  if (ds.questions.empty()) throw ConfigError(path, "dataset has no questions");
  return ds;
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> number_or_null(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const CandidatePrompt& p) {
  return {{"text", p.text},
          {"similarity", p.similarity},
          {"verdict", p.verdict ? nlohmann::json(*p.verdict) : nlohmann::json(nullptr)},
          {"origin", std::string(to_string(p.origin))},
          {"generation", p.generation},
          {"form_index", p.form_index ? nlohmann::json(*p.form_index) : nlohmann::json(nullptr)}};
}

CandidatePrompt candidate_from_json(const nlohmann::json& j) {
  CandidatePrompt p;
  p.text = j.at("text").get<std::string>();
  p.similarity = j.at("similarity").get<double>();
  if (!j.at("verdict").is_null()) p.verdict = j.at("verdict").get<bool>();
  p.origin = origin_from_string(j.at("origin").get<std::string>());
  p.generation = j.at("generation").get<int>();
  if (!j.at("form_index").is_null()) p.form_index = j.at("form_index").get<int>();
  return p;
}

nlohmann::json to_json(const GenerationRecord& r, const std::string& question_id) {
  return {{"v", kSchemaVersion},
          {"question_id", question_id},
          {"index", r.index},
          {"phase", r.phase},
          {"assessed", r.assessed},
          {"survivors", r.survivors},
          {"top_before", optional_number(r.top_before)},
          {"top_after", optional_number(r.top_after)},
          {"static_count_after", r.static_count_after},
          {"termination", r.termination ? nlohmann::json(std::string(to_string(*r.termination)))
                                        : nlohmann::json(nullptr)}};
}

GenerationRecord record_from_json(const nlohmann::json& j) {
  if (j.at("v").get<int>() != kSchemaVersion) throw ConfigError("generation log", "unsupported schema version");
  GenerationRecord r;
  r.index = j.at("index").get<int>();
  r.phase = j.at("phase").get<std::string>();
  r.assessed = j.at("assessed").get<std::size_t>();
  r.survivors = j.at("survivors").get<std::size_t>();
  r.top_before = number_or_null(j.at("top_before"));
  r.top_after = number_or_null(j.at("top_after"));
  r.static_count_after = j.at("static_count_after").get<int>();
  if (!j.at("termination").is_null()) {
    r.termination = termination_from_string(j.at("termination").get<std::string>());
  }
  return r;
}

std::string log_file_name(const std::string& question_id) {
  std::string safe;
  for (char c : question_id) {
    safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  }
  // The hash suffix keeps ids that sanitize to the same name apart.
  return safe + "-" + oracle::sha256_hex(question_id).substr(0, 8) + ".jsonl";
}

nlohmann::json to_json(const QuestionResult& r) {
  return {{"question_id", r.question_id},
          {"question", r.question},
          {"best", r.best ? to_json(*r.best) : nlohmann::json(nullptr)},
          {"termination", r.termination ? nlohmann::json(std::string(to_string(*r.termination)))
                                        : nlohmann::json(nullptr)},
          {"failure", r.failure ? nlohmann::json(*r.failure) : nlohmann::json(nullptr)}};
}

QuestionResult question_result_from_json(const nlohmann::json& j) {
  QuestionResult r;
  r.question_id = j.at("question_id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  if (!j.at("best").is_null()) r.best = candidate_from_json(j.at("best"));
  if (!j.at("termination").is_null()) {
    r.termination = termination_from_string(j.at("termination").get<std::string>());
  }
  if (!j.at("failure").is_null()) r.failure = j.at("failure").get<std::string>();
  return r;
}

std::vector<evalkit::AttackResult> RunArtifacts::attack_results() const {
  std::vector<evalkit::AttackResult> out;
  auto method = stage == AblationStage::QuestionOnly ? evalkit::Method::OriginalQuestion
                                                      : evalkit::Method::SMJ;
  for (const auto& r : results) {
    evalkit::AttackResult a;
    a.question_id = r.question_id;
    a.victim_id = victim_id;
    a.method = method;
    if (r.best) {
      a.best = BestSolution{*r.best, r.question_id};
      a.all_prompts.push_back(*r.best);
    } else if (method == evalkit::Method::OriginalQuestion) {
      // The raw question was judged and refused.
      CandidatePrompt raw;
      raw.text = r.question;
      raw.similarity = 1.0;
      raw.verdict = false;
      raw.origin = Origin::Original;
      a.all_prompts.push_back(raw);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<std::string> RunArtifacts::best_prompts() const {
  std::vector<std::string> out;
  for (const auto& r : results) {
    if (r.best) out.push_back(r.best->text);
  }
  return out;
}

RunArtifacts load_run(const fs::path& dir) {
  std::vector<std::string> missing;
  for (const char* name : {"manifest.json", "config.json", "results.json"}) {
    if (!fs::is_regular_file(dir / name)) missing.emplace_back(name);
  }
  if (!fs::is_directory(dir / "generations")) missing.emplace_back("generations/");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError(dir.string(), "missing run artifacts: " + list);
  }

  RunArtifacts run;
  run.dir = dir;
  try {
    run.manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    if (run.manifest.at("v").get<int>() != kSchemaVersion) {
      throw ConfigError("manifest.json", "unsupported schema version");
    }
    auto config_text = read_file(dir / "config.json");
    if (oracle::sha256_hex(config_text) != run.manifest.at("config_sha256").get<std::string>()) {
      throw ConfigError("config.json", "does not match the manifest's config hash");
    }
    run.stage = parse_config(config_text).ablation_stage;
    run.victim_id = run.manifest.at("backends").at("victim").get<std::string>();

    const auto& ds = run.manifest.at("dataset");
    fs::path ds_path = ds.at("path").get<std::string>();
    if (fs::is_regular_file(ds_path)) {
      if (oracle::sha256_hex(read_file(ds_path)) != ds.at("sha256").get<std::string>()) {
        throw ConfigError(ds_path.string(), "dataset changed since the attack run (hash mismatch)");
      }
    } else {
      spdlog::warn("dataset {} no longer exists; hash not verified", ds_path.string());
    }

    auto results = nlohmann::json::parse(read_file(dir / "results.json"));
    if (results.at("v").get<int>() != kSchemaVersion) {
      throw ConfigError("results.json", "unsupported schema version");
    }
    for (const auto& q : results.at("questions")) run.results.push_back(question_result_from_json(q));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(dir.string(), std::string("malformed run artifact: ") + e.what());
  }

  for (const auto& r : run.results) {
    auto log = dir / "generations" / log_file_name(r.question_id);
    if (!fs::is_regular_file(log)) missing.push_back("generations/" + log_file_name(r.question_id));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError(dir.string(), "missing run artifacts: " + list);
  }
  return run;
}

}  // namespace smj::cli

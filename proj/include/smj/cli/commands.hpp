#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smj/core/config.hpp"
#include "smj/defense/defense.hpp"
#include "smj/judge/judge.hpp"
#include "smj/oracle/cache.hpp"
#include "smj/oracle/interfaces.hpp"
#include "smj/oracle/similarity.hpp"
#include "smj/oracle/substitution.hpp"

namespace smj::cli {

namespace fs = std::filesystem;

enum class BackendKind { Reference, Sidecar, OpenAICompat };

BackendKind backend_from_string(const std::string& s);

// Where every oracle comes from. Empty endpoint strings fall back to the
// VICTIM_ENDPOINT / VICTIM_API_KEY / SIDECAR_ENDPOINT environment variables.
struct BackendOptions {
  BackendKind kind = BackendKind::Reference;
  std::string data_dir;  // bundled defaults for the files below
  std::string synonyms;
  std::string victim_script;
  std::string paraphrase_table;
  std::string lexicon;
  std::string corpus;
  std::size_t embed_dim = 1024;
  std::size_t injection_max_tokens = 100;
  std::string sidecar_endpoint;
  std::string victim_endpoint;
  std::string victim_api_key;
  std::string victim_model = "victim";
  int max_new_tokens = 256;
  std::string cache_dir;  // empty: no on-disk cache
  bool defense_onion = false;
  int outlier_threshold = 0;
  double suspicion_threshold = 0.0;
};

// Owns one configured set of oracles.
class Backends {
 public:
  explicit Backends(const BackendOptions& options);
  ~Backends();

  oracle::Embedder& embedder() { return *embedder_; }
  oracle::Paraphraser& paraphraser() { return *paraphraser_; }
  // The victim as attacked (wrapped by the ONION gate when enabled).
  oracle::Victim& victim() { return *victim_; }
  // The victim without any defense wrapper.
  oracle::Victim& raw_victim() { return *raw_victim_; }
  oracle::PerplexityScorer& perplexity() { return *perplexity_; }
  oracle::InjectionClassifier& classifier() { return *classifier_; }
  oracle::SimilarityScorer& similarity() { return *similarity_; }
  const oracle::SubstitutionSource& substitutions() const { return *substitutions_; }
  const judge::RefusalLexicon& lexicon() const { return *lexicon_; }

  nlohmann::json describe() const;

 private:
  std::unique_ptr<oracle::OracleCache> cache_;
  std::vector<std::unique_ptr<oracle::Embedder>> embedders_;
  std::vector<std::unique_ptr<oracle::Paraphraser>> paraphrasers_;
  std::vector<std::unique_ptr<oracle::Victim>> victims_;
  std::vector<std::unique_ptr<oracle::PerplexityScorer>> scorers_;
  std::vector<std::unique_ptr<oracle::InjectionClassifier>> classifiers_;
  oracle::Embedder* embedder_ = nullptr;
  oracle::Paraphraser* paraphraser_ = nullptr;
  oracle::Victim* victim_ = nullptr;
  oracle::Victim* raw_victim_ = nullptr;
  oracle::PerplexityScorer* perplexity_ = nullptr;
  oracle::InjectionClassifier* classifier_ = nullptr;
  std::unique_ptr<oracle::SimilarityScorer> similarity_;
  std::unique_ptr<oracle::SubstitutionSource> substitutions_;
  std::unique_ptr<judge::RefusalLexicon> lexicon_;
};

struct AttackOptions {
  std::string dataset;
  std::string config_path;  // empty: defaults
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<AblationStage> ablation;
  int workers = 1;
  std::size_t victim_batch = 16;
  BackendOptions backends;
};

struct AttackSummary {
  fs::path run_dir;
  std::size_t questions = 0;
  std::size_t solved = 0;
  std::size_t failed = 0;  // runs aborted by an oracle outage
};

AttackSummary cmd_attack(const AttackOptions& options);

struct EvalOptions {
  fs::path run_dir;
  fs::path out;  // empty: the run directory
  std::vector<double> floors;  // empty: 0, .6, .7, .8, .9
  bool defense_onion = false;
  std::optional<int> outlier_threshold;  // empty: calibrated from the run's prompts
  BackendOptions backends;
};

nlohmann::json cmd_eval(const EvalOptions& options);

struct TransferOptions {
  std::vector<fs::path> sources;
  // "reference[:victim_script]", "sidecar[:url]" or "openai-compat[:model]".
  std::vector<std::string> targets;
  std::vector<double> floors;  // empty: 0, 0.7
  fs::path out;
  BackendOptions backends;
};

nlohmann::json cmd_transfer(const TransferOptions& options);

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 validation error, 2 backend failure.
int run_cli(int argc, const char* const* argv);

}  // namespace smj::cli

#include "smj/cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "smj/cli/storage.hpp"
#include "smj/core/errors.hpp"
#include "smj/core/text.hpp"
#include "smj/engine/engine.hpp"
#include "smj/evalkit/metrics.hpp"
#include "smj/oracle/reference.hpp"
#include "smj/oracle/remote.hpp"

#ifndef SMJ_DATA_DIR
#define SMJ_DATA_DIR "data"
#endif

namespace smj::cli {

namespace {

std::string env_or(const std::string& value, const char* var) {
  if (!value.empty()) return value;
  const char* v = std::getenv(var);
  return v ? std::string(v) : std::string();
}

std::string data_file(const BackendOptions& o, const std::string& explicit_path, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  return (fs::path(o.data_dir.empty() ? SMJ_DATA_DIR : o.data_dir) / name).string();
}

std::shared_ptr<oracle::JsonHttpClient> http_client(const std::string& url, const std::string& token,
                                                    const char* what) {
  if (url.empty()) throw ConfigError(what, "endpoint not set (flag or environment variable)");
  oracle::HttpOptions opts;
  opts.bearer_token = token;
  return std::make_shared<oracle::JsonHttpClient>(oracle::HttpEndpoint::parse(url), opts);
}

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x * 100.0);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string floor_label(double f) { return ">=" + percent(f).substr(0, percent(f).find('.')) + "%"; }

}  // namespace

BackendKind backend_from_string(const std::string& s) {
  if (s == "reference") return BackendKind::Reference;
  if (s == "sidecar") return BackendKind::Sidecar;
  if (s == "openai-compat") return BackendKind::OpenAICompat;
  throw ConfigError("--backend", "unknown backend '" + s + "'");
}

Backends::Backends(const BackendOptions& o) {
  lexicon_ = std::make_unique<judge::RefusalLexicon>(
      o.lexicon.empty() ? judge::RefusalLexicon::standard() : judge::RefusalLexicon::load(o.lexicon));
  substitutions_ = std::make_unique<oracle::SynonymTable>(
      oracle::SynonymTable::load(data_file(o, o.synonyms, "synonyms.tsv")));
  if (!o.cache_dir.empty()) cache_ = std::make_unique<oracle::OracleCache>(o.cache_dir);

  auto sidecar_url = env_or(o.sidecar_endpoint, "SIDECAR_ENDPOINT");
  bool use_sidecar = o.kind == BackendKind::Sidecar ||
                     (o.kind == BackendKind::OpenAICompat && !sidecar_url.empty());

  if (use_sidecar) {
    auto client = http_client(sidecar_url, "", "SIDECAR_ENDPOINT");
    embedders_.push_back(std::make_unique<oracle::SidecarEmbedder>(client));
    paraphrasers_.push_back(std::make_unique<oracle::SidecarParaphraser>(client));
    scorers_.push_back(std::make_unique<oracle::SidecarPerplexity>(client));
    classifiers_.push_back(std::make_unique<oracle::SidecarClassifier>(client));
    if (o.kind == BackendKind::Sidecar) {
      victims_.push_back(std::make_unique<oracle::SidecarVictim>(client, o.max_new_tokens));
    }
  } else {
    embedders_.push_back(std::make_unique<oracle::HashedBagEmbedder>(o.embed_dim));
    if (o.paraphrase_table.empty()) {
      paraphrasers_.push_back(std::make_unique<oracle::FrameParaphraser>());
    } else {
      paraphrasers_.push_back(std::make_unique<oracle::FrameParaphraser>(
          oracle::FrameParaphraser::load_overrides(o.paraphrase_table)));
    }
    scorers_.push_back(std::make_unique<oracle::UnigramPerplexity>(
        oracle::UnigramPerplexity::load(data_file(o, o.corpus, "corpus.txt"))));
    classifiers_.push_back(std::make_unique<oracle::LengthInjectionClassifier>(o.injection_max_tokens));
  }

  if (o.kind == BackendKind::OpenAICompat) {
    auto client = http_client(env_or(o.victim_endpoint, "VICTIM_ENDPOINT"),
                              env_or(o.victim_api_key, "VICTIM_API_KEY"), "VICTIM_ENDPOINT");
    victims_.push_back(std::make_unique<oracle::OpenAICompatVictim>(
        client, oracle::OpenAICompatVictim::Options{o.victim_model, o.max_new_tokens, 0.0}));
  } else if (o.kind == BackendKind::Reference) {
    victims_.push_back(std::make_unique<oracle::ScriptedVictim>(
        oracle::ScriptedVictim::load(data_file(o, o.victim_script, "victim_rules.tsv"))));
  }

  embedder_ = embedders_.back().get();
  paraphraser_ = paraphrasers_.back().get();
  raw_victim_ = victims_.back().get();
  perplexity_ = scorers_.back().get();
  classifier_ = classifiers_.back().get();

  if (cache_) {
    embedders_.push_back(std::make_unique<oracle::CachedEmbedder>(*embedder_, *cache_));
    paraphrasers_.push_back(std::make_unique<oracle::CachedParaphraser>(*paraphraser_, *cache_));
    victims_.push_back(std::make_unique<oracle::CachedVictim>(*raw_victim_, *cache_));
    scorers_.push_back(std::make_unique<oracle::CachedPerplexity>(*perplexity_, *cache_));
    classifiers_.push_back(std::make_unique<oracle::CachedClassifier>(*classifier_, *cache_));
    embedder_ = embedders_.back().get();
    paraphraser_ = paraphrasers_.back().get();
    raw_victim_ = victims_.back().get();
    perplexity_ = scorers_.back().get();
    classifier_ = classifiers_.back().get();
  }

  victim_ = raw_victim_;
  if (o.defense_onion) {
    victims_.push_back(std::make_unique<defense::DefendedVictim>(*raw_victim_, *perplexity_,
                                                                 o.outlier_threshold, o.suspicion_threshold));
    victim_ = victims_.back().get();
  }
  similarity_ = std::make_unique<oracle::SimilarityScorer>(*embedder_);
}

Backends::~Backends() = default;

nlohmann::json Backends::describe() const {
  return {{"embedder", embedder_->id()},
          {"paraphraser", paraphraser_->id()},
          {"victim", raw_victim_->id()},
          {"attacked_victim", victim_->id()},
          {"perplexity", perplexity_->id()},
          {"classifier", classifier_->id()},
          {"substitutions", substitutions_->id()},
          {"lexicon_size", lexicon_->keywords().size()}};
}

// ---------------------------------------------------------------------------
// attack

AttackSummary cmd_attack(const AttackOptions& options) {
  auto dataset = load_dataset(options.dataset);

  std::string config_text;
  RunConfig config;
  if (options.config_path.empty()) {
    config = validate_config(RunConfig{});
    config_text = config_to_json(config).dump(2) + "\n";
  } else {
    config_text = read_file(options.config_path);
    config = parse_config(config_text);
  }
  bool overridden = false;
  if (options.seed) {
    config.rng_seed = *options.seed;
    overridden = true;
  }
  if (options.ablation) {
    config.ablation_stage = *options.ablation;
    overridden = true;
  }
  // With command-line overrides the snapshot is the effective config.
  if (overridden) config_text = config_to_json(config).dump(2) + "\n";

  Backends backends(options.backends);
  const std::string started = utc_now();

  fs::create_directories(options.out / "generations");
  write_file(options.out / "config.json", config_text);

  const auto n = dataset.questions.size();
  std::vector<QuestionResult> results(n);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      auto i = next.fetch_add(1);
      if (i >= n) return;
      const auto& q = dataset.questions[i];
      try {
        RunConfig qc = config;
        qc.rng_seed = mix_seed(config.rng_seed ^ text::fnv1a64(q.id));
        engine::Oracles oracles{backends.similarity(), backends.substitutions(), backends.paraphraser(),
                                backends.victim(),     backends.lexicon(),       options.victim_batch};
        auto outcome = engine::run_smj(q, qc, oracles);

        std::string log;
        for (const auto& r : outcome.records) log += to_json(r, q.id).dump() + "\n";
        write_file(options.out / "generations" / log_file_name(q.id), log);

        QuestionResult& res = results[i];
        res.question_id = q.id;
        res.question = q.text;
        if (outcome.best) res.best = outcome.best->prompt;
        res.termination = outcome.termination;
        res.failure = outcome.failure;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = n;
        return;
      }
    }
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  AttackSummary summary{options.out, n, 0, 0};
  nlohmann::json questions = nlohmann::json::array();
  nlohmann::json terminations = nlohmann::json::object();
  for (const auto& r : results) {
    questions.push_back(to_json(r));
    summary.solved += r.best ? 1 : 0;
    summary.failed += r.failure ? 1 : 0;
    terminations[r.question_id] =
        r.failure ? std::string("failed") : std::string(r.termination ? to_string(*r.termination) : "none");
  }
  write_file(options.out / "results.json",
             nlohmann::json{{"v", kSchemaVersion}, {"questions", questions}}.dump(2) + "\n");

  auto described = backends.describe();
  nlohmann::json manifest{
      {"v", kSchemaVersion},
      {"run_id", oracle::sha256_hex(config_text + dataset.sha256 + described.dump()).substr(0, 16)},
      {"config", config_to_json(config)},
      {"config_sha256", oracle::sha256_hex(config_text)},
      {"config_source", options.config_path.empty() ? "defaults" : options.config_path},
      {"config_overridden", overridden},
      {"dataset", {{"path", fs::absolute(dataset.path).string()}, {"sha256", dataset.sha256},
                   {"questions", n}}},
      {"backends", described},
      {"started_at", started},
      {"finished_at", utc_now()},
      {"terminations", terminations},
      {"complete", summary.failed == 0},
  };
  write_file(options.out / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// eval

nlohmann::json cmd_eval(const EvalOptions& options) {
  auto run = load_run(options.run_dir);
  std::vector<double> floors = options.floors;
  if (floors.empty()) floors = {0.0, 0.6, 0.7, 0.8, 0.9};

  auto results = run.attack_results();
  if (results.empty()) throw ConfigError(options.run_dir.string(), "run has no results");
  Backends backends(options.backends);
  auto prompts = run.best_prompts();

  nlohmann::json asr = nlohmann::json::array();
  nlohmann::json sim = nlohmann::json::array();
  for (double f : floors) {
    asr.push_back(evalkit::compute_asr(results, f));
    auto m = evalkit::mean_similarity(results, f);
    sim.push_back({{"value", m.value}, {"empty", m.empty}});
  }
  auto all = evalkit::mean_similarity(results, std::nullopt);

  nlohmann::json report{
      {"v", kSchemaVersion},
      {"run_id", run.manifest.at("run_id")},
      {"victim", run.victim_id},
      {"ablation_stage", std::string(to_string(run.stage))},
      {"questions", results.size()},
      {"floors", floors},
      {"asr", asr},
      {"similarity", sim},
      {"similarity_all", {{"value", all.value}, {"empty", all.empty}}},
      {"jpt_rate", evalkit::jpt_rate(prompts, backends.classifier())},
      {"outlier_mean", evalkit::outlier_mean(prompts, backends.perplexity())},
      {"defense", nullptr},
  };

  if (options.defense_onion) {
    int threshold = 0;
    bool calibrated = !options.outlier_threshold.has_value();
    if (options.outlier_threshold) {
      threshold = *options.outlier_threshold;
    } else {
      std::vector<std::string> scannable;
      for (const auto& p : prompts) {
        if (text::split_words(p).size() >= 2) scannable.push_back(p);
      }
      if (!scannable.empty()) {
        threshold = defense::calibrate_outlier_threshold(scannable, backends.perplexity());
      }
    }
    nlohmann::json defended = nlohmann::json::array();
    for (double f : floors) {
      defended.push_back(evalkit::asr_under_defense(results, backends.raw_victim(), backends.perplexity(),
                                                    backends.lexicon(), threshold, f));
    }
    report["defense"] = {{"outlier_threshold", threshold}, {"calibrated", calibrated}, {"asr", defended}};
  }

  std::ostringstream txt;
  txt << "run " << report["run_id"].get<std::string>() << "  victim " << run.victim_id << "  stage "
      << to_string(run.stage) << "  questions " << results.size() << "\n\n";
  txt << pad("", 14);
  for (double f : floors) txt << pad(floor_label(f), 10);
  txt << "\n" << pad("ASR", 14);
  for (const auto& a : asr) txt << pad(percent(a.get<double>()), 10);
  txt << "\n" << pad("Similarity", 14);
  for (const auto& s : sim) {
    txt << pad(percent(s["value"].get<double>()) + (s["empty"].get<bool>() ? "*" : ""), 10);
  }
  if (!report["defense"].is_null()) {
    txt << "\n" << pad("ASR+ONION", 14);
    for (const auto& a : report["defense"]["asr"]) txt << pad(percent(a.get<double>()), 10);
  }
  txt << "\n\nSimilarity (all prompts): " << percent(all.value) << (all.empty ? "*" : "") << "\n";
  txt << "Jailbreak Prompt: " << percent(report["jpt_rate"].get<double>()) << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", report["outlier_mean"].get<double>());
  txt << "Outlier: " << buf << "\n";
  if (!report["defense"].is_null()) {
    txt << "ONION outlier threshold: " << report["defense"]["outlier_threshold"].get<int>()
        << (report["defense"]["calibrated"].get<bool>() ? " (calibrated)" : "") << "\n";
  }
  txt << "(* no prompt passed the filter)\n";

  fs::path out = options.out.empty() ? options.run_dir : options.out;
  write_file(out / "report.json", report.dump(2) + "\n");
  write_file(out / "report.txt", txt.str());
  return report;
}

// ---------------------------------------------------------------------------
// transfer

nlohmann::json cmd_transfer(const TransferOptions& options) {
  if (options.sources.empty()) throw ConfigError("--source", "at least one source run is required");
  if (options.targets.empty()) throw ConfigError("--target", "at least one target is required");
  std::vector<double> floors = options.floors;
  if (floors.empty()) floors = {0.0, 0.7};

  std::vector<evalkit::PromptSet> sets;
  for (const auto& dir : options.sources) {
    evalkit::PromptSet set;
    try {
      auto run = load_run(dir);
      set.source_id = run.victim_id;
      std::vector<evalkit::PromptEntry> entries;
      for (const auto& r : run.results) {
        evalkit::PromptEntry e;
        e.question_id = r.question_id;
        if (r.best) {
          e.text = r.best->text;
          e.similarity = r.best->similarity;
        }
        entries.push_back(std::move(e));
      }
      set.entries = std::move(entries);
    } catch (const ConfigError& e) {
      spdlog::warn("transfer: source {} unavailable: {}", dir.string(), e.what());
      set.source_id = dir.filename().string();
    }
    sets.push_back(std::move(set));
  }

  std::vector<std::unique_ptr<Backends>> owned;
  std::vector<evalkit::VictimTarget> targets;
  for (const auto& spec : options.targets) {
    auto colon = spec.find(':');
    auto kind = spec.substr(0, colon);
    auto arg = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
    BackendOptions bo = options.backends;
    bo.kind = backend_from_string(kind);
    bo.defense_onion = false;
    if (!arg.empty()) {
      if (bo.kind == BackendKind::Reference) bo.victim_script = arg;
      else if (bo.kind == BackendKind::Sidecar) bo.sidecar_endpoint = arg;
      else bo.victim_model = arg;
    }
    owned.push_back(std::make_unique<Backends>(bo));
    targets.push_back({owned.back()->raw_victim().id(), &owned.back()->raw_victim()});
  }

  auto cells = evalkit::transfer_matrix(sets, targets, floors, owned.front()->lexicon());

  nlohmann::json jcells = nlohmann::json::array();
  for (const auto& c : cells) {
    jcells.push_back({{"source", c.source},
                      {"target", c.target},
                      {"floor", c.floor},
                      {"absent", c.absent},
                      {"white_box", c.white_box},
                      {"asr", c.asr},
                      {"similarity", {{"value", c.mean_similarity.value}, {"empty", c.mean_similarity.empty}}}});
  }
  nlohmann::json sources = nlohmann::json::array(), target_ids = nlohmann::json::array();
  for (const auto& s : sets) sources.push_back(s.source_id);
  for (const auto& t : targets) target_ids.push_back(t.id);
  nlohmann::json report{{"v", kSchemaVersion}, {"floors", floors}, {"sources", sources},
                        {"targets", target_ids}, {"cells", jcells}};

  std::ostringstream txt;
  std::size_t k = 0;
  for (double f : floors) {
    txt << "Floor " << floor_label(f) << "  (ASR / Similarity; * white-box, - absent)\n";
    txt << pad("source \\ target", 28);
    for (const auto& t : targets) txt << pad(t.id, 28);
    txt << "\n";
    for (const auto& s : sets) {
      txt << pad(s.source_id, 28);
      for (const auto& t : targets) {
        // Cells are source-major, then target, then floor.
        (void)t;
        const auto* cell = &cells[0];
        for (const auto& c : cells) {
          if (c.source == s.source_id && c.target == t.id && c.floor == f) {
            cell = &c;
            break;
          }
        }
        std::string entry = cell->absent ? "-"
                                         : percent(cell->asr) + " / " + percent(cell->mean_similarity.value) +
                                               (cell->white_box ? " *" : "");
        txt << pad(entry, 28);
      }
      txt << "\n";
    }
    txt << "\n";
    ++k;
  }

  fs::path out = options.out.empty() ? fs::path(".") : options.out;
  write_file(out / "transfer.json", report.dump(2) + "\n");
  write_file(out / "transfer.txt", txt.str());
  return report;
}

// ---------------------------------------------------------------------------
// command line

namespace {

void add_backend_flags(CLI::App& cmd, BackendOptions& o, std::string& backend) {
  cmd.add_option("--backend", backend, "Oracle backend")
      ->check(CLI::IsMember({"reference", "sidecar", "openai-compat"}));
  cmd.add_option("--data-dir", o.data_dir, "Directory holding the bundled reference data files");
  cmd.add_option("--synonyms", o.synonyms, "Synonym table (word<TAB>cand,cand,...)");
  cmd.add_option("--victim-script", o.victim_script, "Scripted victim rules (pattern<TAB>response)");
  cmd.add_option("--paraphrase-table", o.paraphrase_table, "Paraphrase overrides (text<TAB>form<TAB>output)");
  cmd.add_option("--lexicon", o.lexicon, "Refusal keyword file, one per line");
  cmd.add_option("--corpus", o.corpus, "Corpus for the reference perplexity model");
  cmd.add_option("--embed-dim", o.embed_dim, "Reference embedding dimension");
  cmd.add_option("--sidecar-endpoint", o.sidecar_endpoint, "Sidecar base URL (env SIDECAR_ENDPOINT)");
  cmd.add_option("--victim-endpoint", o.victim_endpoint, "OpenAI-compatible API base (env VICTIM_ENDPOINT)");
  cmd.add_option("--victim-api-key", o.victim_api_key, "API key (env VICTIM_API_KEY)");
  cmd.add_option("--victim-model", o.victim_model, "Model name sent to the OpenAI-compatible endpoint");
  cmd.add_option("--max-new-tokens", o.max_new_tokens, "Victim generation length");
  cmd.add_option("--cache", o.cache_dir, "On-disk oracle cache directory");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Semantic-similarity-constrained genetic search for jailbreak paraphrases"};
  app.require_subcommand(1);

  AttackOptions attack;
  std::string attack_backend = "reference", attack_ablation, attack_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> attack_threshold;
  std::vector<double> attack_floors;
  auto* cmd_a = app.add_subcommand("attack", "Run the search for every question of a dataset");
  cmd_a->add_option("--dataset", attack.dataset, "Question file")->required();
  cmd_a->add_option("--config", attack.config_path, "Run configuration (flat JSON object)");
  cmd_a->add_option("--out", attack_out, "Run directory to create")->required();
  cmd_a->add_option("--seed", seed, "Override rng_seed");
  cmd_a->add_option("--ablation", attack_ablation, "Ablation stage")
      ->check(CLI::IsMember({"question", "init", "full"}));
  cmd_a->add_flag("--defense-onion", attack.backends.defense_onion, "Attack an ONION-defended victim");
  cmd_a->add_option("--outlier-threshold", attack_threshold, "ONION outlier threshold");
  cmd_a->add_option("--floor", attack_floors, "Accepted for symmetry with eval; unused by attack");
  cmd_a->add_option("--workers", attack.workers, "Questions run concurrently");
  cmd_a->add_option("--victim-batch", attack.victim_batch, "Prompts per victim batch");
  add_backend_flags(*cmd_a, attack.backends, attack_backend);

  EvalOptions eval;
  std::string eval_backend = "reference", eval_dir, eval_out;
  std::optional<int> eval_threshold;
  auto* cmd_e = app.add_subcommand("eval", "Compute metrics for a finished run");
  cmd_e->add_option("run", eval_dir, "Run directory")->required();
  cmd_e->add_option("--out", eval_out, "Report directory (default: the run directory)");
  cmd_e->add_option("--floor", eval.floors, "Similarity floor (repeatable)");
  cmd_e->add_flag("--defense-onion", eval.defense_onion, "Also report ASR under the ONION gate");
  cmd_e->add_option("--outlier-threshold", eval_threshold, "ONION outlier threshold (default: calibrated)");
  add_backend_flags(*cmd_e, eval.backends, eval_backend);

  TransferOptions transfer;
  std::string transfer_backend = "reference", transfer_out;
  std::vector<std::string> transfer_sources;
  auto* cmd_t = app.add_subcommand("transfer", "Re-judge prompts of source runs on target victims");
  cmd_t->add_option("--source", transfer_sources, "Source run directory (repeatable)")->required();
  cmd_t->add_option("--target", transfer.targets,
                    "Target victim: reference[:rules] | sidecar[:url] | openai-compat[:model]")
      ->required();
  cmd_t->add_option("--floor", transfer.floors, "Similarity floor (repeatable)");
  cmd_t->add_option("--out", transfer_out, "Report directory")->required();
  add_backend_flags(*cmd_t, transfer.backends, transfer_backend);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cmd_a) {
      attack.out = attack_out;
      attack.seed = seed;
      if (!attack_ablation.empty()) attack.ablation = ablation_from_string(attack_ablation);
      attack.backends.kind = backend_from_string(attack_backend);
      if (attack_threshold) attack.backends.outlier_threshold = *attack_threshold;
      auto s = cmd_attack(attack);
      std::cout << "attack: " << s.solved << "/" << s.questions << " questions solved, run directory "
                << s.run_dir.string() << "\n";
      if (s.failed > 0) {
        std::cerr << "attack: " << s.failed << " question(s) aborted by backend failures\n";
        return 2;
      }
    } else if (*cmd_e) {
      eval.run_dir = eval_dir;
      eval.out = eval_out;
      eval.outlier_threshold = eval_threshold;
      eval.backends.kind = backend_from_string(eval_backend);
      cmd_eval(eval);
      fs::path out = eval.out.empty() ? eval.run_dir : eval.out;
      std::cout << read_file(out / "report.txt");
    } else if (*cmd_t) {
      for (const auto& s : transfer_sources) transfer.sources.emplace_back(s);
      transfer.out = transfer_out;
      transfer.backends.kind = backend_from_string(transfer_backend);
      cmd_transfer(transfer);
      std::cout << read_file(transfer.out / "transfer.txt");
    }
  } catch (const BackendUnavailable& e) {
    std::cerr << "backend failure: " << e.what() << "\n";
    return 2;
  } catch (const OracleError& e) {
    std::cerr << "backend failure: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace smj::cli

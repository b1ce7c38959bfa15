#include "cli.h"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "jointkpe/baselines.h"
#include "jointkpe/corpus.h"
#include "jointkpe/error.h"
#include "jointkpe/evaluator.h"
#include "jointkpe/extractor.h"
#include "jointkpe/model_io.h"
#include "jointkpe/parallel.h"
#include "jointkpe/rng.h"
#include "jointkpe/tokenizer.h"
#include "jointkpe/toy.h"
#include "jointkpe/trainer.h"

namespace jointkpe::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct Session {
  RunConfig cfg;
  std::string command;
  std::string config_snapshot;
  fs::path run_dir;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

json config_json(const RunConfig& c) {
  return json{
      {"profile", c.profile},
      {"corpus", c.corpus.string()},
      {"vocab", c.vocab.string()},
      {"model", c.model.string()},
      {"embeddings", c.embeddings.string()},
      {"predictions", c.predictions.string()},
      {"lexicon", c.lexicon.string()},
      {"out", c.out.string()},
      {"run_name", c.run_name},
      {"encoder", c.encoder},
      {"d", c.d},
      {"d_g", c.d_g},
      {"mix_window", c.mix_window},
      {"k_max", c.k_max},
      {"min_freq", c.min_freq},
      {"epochs", c.epochs},
      {"peak_lr", c.peak_lr},
      {"warmup_fraction", c.warmup_fraction},
      {"weight_decay", c.weight_decay},
      {"grad_clip", c.grad_clip},
      {"neg_cap", c.neg_cap},
      {"seed", c.seed},
      {"max_tokens", c.max_tokens},
      {"block_size", c.block_size},
      {"c", c.c},
      {"k_values", c.k_values},
      {"folds", c.folds},
      {"jobs", c.jobs},
      {"method", c.method},
      {"stopwords", c.stopwords},
      {"n_docs", c.n_docs},
      {"min_words", c.min_words},
      {"max_words", c.max_words},
  };
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// Picks the run directory and refuses to reuse one unless --force.
void reserve_run_dir(Session& s) {
  const std::string name = s.cfg.run_name.empty() ? s.command + "-" + timestamp() : s.cfg.run_name;
  s.run_dir = s.cfg.out / name;
  if (fs::exists(s.run_dir) && !s.cfg.force) {
    Throw(ErrorKind::kConfig, "run directory " + s.run_dir.string() +
                                  " already exists; pass --force to overwrite");
  }
}

void open_run_dir(Session& s) {
  fs::create_directories(s.run_dir);
  std::ofstream(s.run_dir / "config.ini") << s.config_snapshot;
}

void write_manifest(const Session& s, json extra) {
  json m = {
      {"command", s.command},
      {"version", kVersion},
      {"seed", s.cfg.seed},
      {"config", config_json(s.cfg)},
      {"wall_seconds",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - s.start).count()},
  };
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream(s.run_dir / "manifest.json") << m.dump(2) << '\n';
}

// Document ids become file names.
std::string file_stem(const std::string& id) {
  std::string out = id;
  for (char& ch : out) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' || ch == '.';
    if (!ok) ch = '_';
  }
  return out;
}

AlignmentRules alignment_rules(const RunConfig& cfg) {
  AlignmentRules rules = AlignmentRules::defaults();
  if (!cfg.lexicon.empty()) rules = load_lexicon(cfg.lexicon, std::move(rules));
  rules.validate();
  return rules;
}

std::vector<ChatDocument> load_annotated(const RunConfig& cfg) {
  auto docs = load_corpus(cfg.corpus);
  const AlignmentRules rules = alignment_rules(cfg);
  std::size_t unaligned = 0, spans = 0;
  for (auto& d : docs) {
    const auto st = annotate(d, rules);
    unaligned += st.unaligned.size();
    spans += st.total_spans;
  }
  spdlog::info("loaded {} documents from {} ({} gold spans, {} unaligned phrases)", docs.size(),
               cfg.corpus.string(), spans, unaligned);
  return docs;
}

StopwordSet stopword_set(const RunConfig& cfg) {
  if (cfg.stopwords == "en") return StopwordSet::english();
  if (cfg.stopwords == "pt") return StopwordSet::portuguese();
  return StopwordSet::load(cfg.stopwords);
}

ModelConfig model_config(const RunConfig& cfg) {
  ModelConfig mc;
  mc.d = cfg.d;
  mc.d_g = cfg.d_g;
  mc.k_max = cfg.k_max;
  mc.mix_window = cfg.mix_window;
  mc.encoder_kind = cfg.encoder == "precomputed" ? EncoderKind::kPrecomputed : EncoderKind::kToy;
  mc.seed = cfg.seed;
  return mc;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.peak_lr = cfg.peak_lr;
  tc.warmup_fraction = cfg.warmup_fraction;
  tc.epochs = cfg.epochs;
  tc.weight_decay = cfg.weight_decay;
  tc.grad_clip_norm = cfg.grad_clip;
  tc.neg_sample_cap = cfg.neg_cap;
  tc.seed = cfg.seed;
  return tc;
}

ExtractConfig extract_config(const RunConfig& cfg) {
  return {cfg.c, cfg.max_tokens, cfg.block_size};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(to_lower(item));
  }
  return out;
}

std::vector<std::string> cv_methods(const RunConfig& cfg) {
  auto methods = split_list(cfg.method);
  if (methods.size() == 1 && methods[0] == "all") methods = {"jointkpe", "tfidf", "rake", "textrank"};
  return methods;
}

// All problems at once, before any work starts.
void validate(const std::string& command, const RunConfig& cfg) {
  std::vector<std::string> problems;
  auto need_file = [&](const fs::path& p, const char* flag) {
    if (p.empty()) {
      problems.push_back(std::string(flag) + " is required");
    } else if (!fs::exists(p)) {
      problems.push_back(std::string(flag) + " " + p.string() + " does not exist");
    }
  };
  const bool reads_corpus = command != "synth" && command != "gradcheck";
  if (reads_corpus) need_file(cfg.corpus, "--corpus");
  if (command == "extract") {
    need_file(cfg.model, "--model");
    need_file(cfg.vocab, "--vocab");
  }
  if (command == "train" && !cfg.vocab.empty() && !fs::exists(cfg.vocab)) {
    problems.push_back("--vocab " + cfg.vocab.string() + " does not exist");
  }
  if (command == "evaluate") need_file(cfg.predictions, "--predictions");
  if (!cfg.lexicon.empty() && !fs::exists(cfg.lexicon)) {
    problems.push_back("--lexicon " + cfg.lexicon.string() + " does not exist");
  }
  if (cfg.profile != "grooming" && cfg.profile != "drugs" && cfg.profile != "custom") {
    problems.push_back("--profile must be grooming, drugs or custom");
  }
  if (cfg.encoder != "toy" && cfg.encoder != "precomputed") {
    problems.push_back("--encoder must be toy or precomputed");
  }
  if (cfg.encoder == "precomputed" && (command == "train" || command == "extract")) {
    need_file(cfg.embeddings, "--embeddings");
  }
  if (cfg.encoder == "precomputed" && command == "cv") {
    problems.push_back("cv trains fresh toy encoders; --encoder precomputed is not supported");
  }
  if (cfg.d < 1) problems.push_back("--d must be >= 1");
  if (cfg.mix_window < 1 || cfg.mix_window % 2 == 0) problems.push_back("--w must be odd and >= 1");
  if (cfg.k_max < 1) problems.push_back("--k-max must be >= 1");
  if (cfg.min_freq < 1) problems.push_back("--min-freq must be >= 1");
  if (cfg.epochs < 1) problems.push_back("--epochs must be >= 1");
  if (!(cfg.peak_lr > 0.0)) problems.push_back("--lr must be > 0");
  if (!(cfg.warmup_fraction > 0.0 && cfg.warmup_fraction < 1.0)) {
    problems.push_back("--warmup must be in (0, 1)");
  }
  if (cfg.block_size < 3) problems.push_back("--block-size must be >= 3");
  if (cfg.max_tokens < cfg.block_size) problems.push_back("--max-tokens must be >= --block-size");
  if (cfg.c < 1) problems.push_back("--c must be >= 1");
  if (cfg.folds < 2) problems.push_back("--folds must be >= 2");
  if (cfg.jobs < 1) problems.push_back("--jobs must be >= 1");
  for (std::size_t i = 0; i < cfg.k_values.size(); ++i) {
    if (cfg.k_values[i] <= 0 || (i > 0 && cfg.k_values[i] <= cfg.k_values[i - 1])) {
      problems.push_back("--k-values must be positive and strictly increasing");
      break;
    }
  }
  if (cfg.k_values.empty()) problems.push_back("--k-values must not be empty");
  if (cfg.stopwords != "en" && cfg.stopwords != "pt" && !fs::exists(cfg.stopwords)) {
    problems.push_back("--stopwords must be en, pt or an existing file");
  }
  if (command == "baseline") {
    const auto m = to_lower(cfg.method);
    if (m != "tfidf" && m != "rake" && m != "textrank") {
      problems.push_back("baseline --method must be tfidf, rake or textrank");
    }
  }
  if (command == "cv") {
    for (const auto& m : cv_methods(cfg)) {
      if (m != "jointkpe" && m != "tfidf" && m != "rake" && m != "textrank") {
        problems.push_back("unknown cv method '" + m + "'");
      }
    }
  }
  if (command == "synth" && cfg.min_words > cfg.max_words) {
    problems.push_back("--min-words must be <= --max-words");
  }
  if (command == "gradcheck" && (cfg.gc_max_d < 2 || cfg.gc_max_tokens < 8)) {
    problems.push_back("gradcheck needs --max-d >= 2 and --doc-tokens >= 8");
  }
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  - " + p;
  Throw(ErrorKind::kConfig, msg);
}

void write_extractions(const fs::path& dir, const std::vector<ChatDocument>& docs,
                       const std::vector<std::vector<PhraseCandidate>>& results) {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.tsv");
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::string name = file_stem(docs[i].id) + ".tsv";
    std::ofstream out(dir / name);
    write_candidates(out, results[i]);
    index << docs[i].id << '\t' << name << '\n';
  }
}

// ---------------------------------------------------------------------------

int cmd_synth(Session& s) {
  SynthConfig sc;
  sc.seed = s.cfg.seed;
  sc.n_docs = s.cfg.n_docs;
  sc.min_words = s.cfg.min_words;
  sc.max_words = s.cfg.max_words;
  const auto docs = synth_corpus(sc);
  open_run_dir(s);
  save_corpus(s.run_dir / "corpus.jsonl", docs);
  std::size_t words = 0;
  for (const auto& d : docs) words += d.word_count;
  spdlog::info("wrote {} documents ({} words) to {}", docs.size(), words,
               (s.run_dir / "corpus.jsonl").string());
  write_manifest(s, {{"documents", docs.size()}, {"words", words}});
  return 0;
}

int cmd_build_vocab(Session& s) {
  const auto docs = load_corpus(s.cfg.corpus);
  const Vocabulary vocab = build_vocab(docs, s.cfg.min_freq);
  open_run_dir(s);
  vocab.save(s.run_dir / "vocab.txt");
  spdlog::info("vocabulary of {} entries written to {}", vocab.size(),
               (s.run_dir / "vocab.txt").string());
  write_manifest(s, {{"vocab_size", vocab.size()},
                     {"vocab_hash", file_digest(s.run_dir / "vocab.txt")}});
  return 0;
}

int cmd_train(Session& s) {
  const RunConfig& cfg = s.cfg;
  const auto docs = load_annotated(cfg);
  const Vocabulary vocab = cfg.vocab.empty() ? build_vocab(docs, cfg.min_freq) : Vocabulary::load(cfg.vocab);
  std::unique_ptr<PrecomputedStore> store;
  ModelConfig mc = model_config(cfg);
  if (mc.encoder_kind == EncoderKind::kPrecomputed) {
    store = std::make_unique<PrecomputedStore>(cfg.embeddings);
    mc.d = store->d();
  }
  const TrainingSet set = make_training_set(docs, vocab, cfg.k_max, cfg.max_tokens, cfg.block_size);
  ModelParams params = init_model(mc, vocab.size());
  open_run_dir(s);
  vocab.save(s.run_dir / "vocab.txt");

  std::ofstream loss_log(s.run_dir / "loss_log.csv");
  TrainHooks hooks;
  hooks.loss_log = &loss_log;
  hooks.checkpoint = s.run_dir / "checkpoint.bin";
  hooks.store = store.get();
  hooks.on_epoch = [&](const EpochLog& e) {
    spdlog::info("epoch {:>3}/{}: loss_rank {:.5f} loss_chunk {:.5f} loss_kpe {:.5f}",
                 e.epoch + 1, cfg.epochs, e.mean_rank, e.mean_chunk, e.mean_kpe);
  };
  spdlog::info("training on {} samples from {} documents, {} parameters", set.items.size(),
               set.docs.size(), params.parameter_count());
  const TrainResult result = train(set, params, train_config(cfg), hooks);
  save_model(s.run_dir / "model.bin", params);
  const auto& last = result.epochs.back();
  write_manifest(s, {{"model_hash", file_digest(s.run_dir / "model.bin")},
                     {"vocab_hash", file_digest(s.run_dir / "vocab.txt")},
                     {"steps", result.steps.size()},
                     {"final_loss_kpe", last.mean_kpe},
                     {"first_loss_kpe", result.epochs.front().mean_kpe}});
  return 0;
}

int cmd_extract(Session& s) {
  const RunConfig& cfg = s.cfg;
  const ModelParams params = load_model(cfg.model);
  const Vocabulary vocab = Vocabulary::load(cfg.vocab);
  std::unique_ptr<PrecomputedStore> store;
  if (params.encoder_kind == EncoderKind::kPrecomputed) {
    if (cfg.embeddings.empty()) Throw(ErrorKind::kConfig, "model needs --embeddings");
    store = std::make_unique<PrecomputedStore>(cfg.embeddings);
  }
  const auto docs = load_corpus(cfg.corpus);
  const ExtractConfig ec = extract_config(cfg);
  std::vector<std::vector<PhraseCandidate>> results(docs.size());
  parallel_for(docs.size(), cfg.jobs, [&](std::size_t i) {
    results[i] = extract_document(docs[i], params, vocab, ec, store.get());
  });
  open_run_dir(s);
  write_extractions(s.run_dir / "extractions", docs, results);
  spdlog::info("extracted keyphrases for {} documents into {}", docs.size(),
               (s.run_dir / "extractions").string());
  write_manifest(s, {{"method", "jointkpe"},
                     {"model_hash", file_digest(cfg.model)},
                     {"documents", docs.size()}});
  return 0;
}

int cmd_baseline(Session& s) {
  const RunConfig& cfg = s.cfg;
  const auto docs = load_corpus(cfg.corpus);
  const StopwordSet stop = stopword_set(cfg);
  const std::string method = to_lower(cfg.method);
  IdfTable idf;
  if (method == "tfidf") idf = IdfTable::build(docs);
  std::vector<std::vector<PhraseCandidate>> results(docs.size());
  parallel_for(docs.size(), cfg.jobs, [&](std::size_t i) {
    std::vector<ScoredPhrase> ranked;
    if (method == "tfidf") {
      ranked = tfidf_extract(docs[i], idf, cfg.c, cfg.k_max, stop);
    } else if (method == "rake") {
      ranked = rake_extract(docs[i], stop, cfg.c, cfg.k_max);
    } else {
      ranked = textrank_extract(docs[i], stop, cfg.c, TextRankOptions{}, cfg.k_max);
    }
    for (auto& p : ranked) {
      PhraseCandidate c;
      c.surface = std::move(p.surface);
      c.score = p.score;
      results[i].push_back(std::move(c));
    }
  });
  open_run_dir(s);
  write_extractions(s.run_dir / "extractions", docs, results);
  write_manifest(s, {{"method", method}, {"stopwords", stop.source}, {"documents", docs.size()}});
  return 0;
}

std::vector<std::string> read_prediction_file(const fs::path& path) {
  std::vector<std::string> out;
  std::ifstream in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) {
      Throw(ErrorKind::kParse, path.string() + ":" + std::to_string(lineno) +
                                   ": expected rank<TAB>score<TAB>surface");
    }
    out.push_back(line.substr(b + 1));
  }
  return out;
}

void emit_reports(const Session& s, const std::vector<EvalReport>& reports) {
  std::ostringstream table;
  write_report_table(table, reports);
  std::cout << table.str();
  std::ofstream(s.run_dir / "report.txt") << table.str();
  for (const auto& r : reports) {
    std::ofstream out(s.run_dir / ("per_document_" + file_stem(to_lower(r.method)) + ".tsv"));
    write_per_document(out, r);
  }
}

json report_json(const EvalReport& r) {
  json rows = json::array();
  for (std::size_t k = 0; k < r.k_values.size(); ++k) {
    rows.push_back({{"k", r.k_values[k]},
                    {"precision", r.overall[k].precision},
                    {"recall", r.overall[k].recall},
                    {"f1", r.overall[k].f1},
                    {"matched_gold", r.matched_gold[k]},
                    {"unmatched_gold", r.unmatched_gold[k]}});
  }
  return {{"method", r.method}, {"overall", rows}, {"wall_seconds", r.wall_seconds}};
}

int cmd_evaluate(Session& s) {
  const RunConfig& cfg = s.cfg;
  const auto docs = load_annotated(cfg);
  std::vector<std::vector<std::string>> preds;
  for (const auto& d : docs) {
    const fs::path p = cfg.predictions / (file_stem(d.id) + ".tsv");
    if (!fs::exists(p)) {
      spdlog::warn("no predictions for {} ({}); scored as empty", d.id, p.string());
      preds.emplace_back();
      continue;
    }
    preds.push_back(read_prediction_file(p));
  }
  const EvalReport rep = evaluate_predictions("predictions", docs, preds, cfg.k_values);
  open_run_dir(s);
  emit_reports(s, {rep});
  write_manifest(s, {{"report", report_json(rep)}});
  return 0;
}

int cmd_cv(Session& s) {
  const RunConfig& cfg = s.cfg;
  const auto docs = load_corpus(cfg.corpus);
  EvalConfig ec;
  ec.k_values = cfg.k_values;
  ec.n_folds = cfg.folds;
  ec.fold_seed = cfg.seed;
  ec.c = cfg.c;
  ec.jobs = cfg.jobs;
  ec.rules = alignment_rules(cfg);
  open_run_dir(s);

  std::vector<EvalReport> reports;
  for (const auto& name : cv_methods(cfg)) {
    std::unique_ptr<KeyphraseMethod> method;
    if (name == "jointkpe") {
      JointKpeSettings js;
      js.model = model_config(cfg);
      js.train = train_config(cfg);
      js.extract = extract_config(cfg);
      js.min_freq = cfg.min_freq;
      js.rules = ec.rules;
      js.on_epoch = [&](const EpochLog& e) {
        spdlog::debug("epoch {:>3}: loss_kpe {:.5f}", e.epoch + 1, e.mean_kpe);
      };
      method = std::make_unique<JointKpeMethod>(std::move(js));
    } else {
      method = make_baseline(name, stopword_set(cfg), cfg.k_max);
    }
    spdlog::info("cross-validating {}", method->name());
    reports.push_back(run_cv(docs, *method, ec));
  }
  emit_reports(s, reports);
  json rj = json::array();
  for (const auto& r : reports) rj.push_back(report_json(r));
  write_manifest(s, {{"methods", cv_methods(cfg)}, {"reports", rj}});
  return 0;
}

int cmd_gradcheck(Session& s) {
  const RunConfig& cfg = s.cfg;
  open_run_dir(s);
  std::ofstream report(s.run_dir / "report.txt");
  bool all_ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.gc_configs; ++i) {
    const ToyCase tc = random_toy_case(derive_seed(cfg.seed, i), cfg.gc_max_d, cfg.gc_max_tokens);
    GradCheckOptions opts;
    opts.eps = cfg.gc_eps;
    opts.tolerance = cfg.gc_tolerance;
    opts.seed = cfg.seed + i;
    const GradCheckReport r = grad_check(tc.params, tc.tdoc, tc.sample, opts);
    worst = std::max(worst, r.max_rel_error);
    all_ok = all_ok && r.passed;
    std::ostringstream line;
    line << (r.passed ? "ok  " : "FAIL") << " case " << i << " [" << tc.description
         << "] max_rel_error=" << r.max_rel_error << " checked=" << r.checked
         << " kink_excluded=" << r.kink_excluded;
    if (!r.worst_tensor.empty()) {
      line << " worst=" << r.worst_tensor << "[" << r.worst_index << "] analytic=" << r.worst_analytic
           << " numeric=" << r.worst_numeric;
    }
    std::cout << line.str() << '\n';
    report << line.str() << '\n';
  }
  write_manifest(s, {{"cases", cfg.gc_configs}, {"max_rel_error", worst}, {"passed", all_ok}});
  if (!all_ok) {
    spdlog::error("gradient check failed (worst relative error {:.3e})", worst);
    return 4;
  }
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument:
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kParse:
    case ErrorKind::kValidation:
    case ErrorKind::kLoad:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
  }
  return 1;
}

}  // namespace

ProfileDefaults profile_defaults(const std::string& profile) {
  if (profile == "drugs") return {20, {20, 30, 40}, 40, 3072};
  return {50, {40, 50, 60}, 60, 8192};
}

int run(int argc, const char* const* argv) {
  RunConfig cfg;
  std::string log_level = "info";
  CLI::App app{"Supervised keyphrase extraction for long chat logs"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value config file; flags override it");
  app.set_version_flag("--version", kVersion);

  auto* o_profile = app.add_option("--profile", cfg.profile, "grooming | drugs | custom")->capture_default_str();
  app.add_option("--corpus", cfg.corpus, "JSONL corpus {id, text, keyphrases}");
  app.add_option("--vocab", cfg.vocab, "Vocabulary file");
  app.add_option("--model", cfg.model, "Model file");
  app.add_option("--embeddings", cfg.embeddings, "Precomputed block embedding directory");
  app.add_option("--predictions", cfg.predictions, "Directory of <doc>.tsv extraction files");
  app.add_option("--lexicon", cfg.lexicon, "Extra abbreviation lexicon for gold alignment");
  app.add_option("--out", cfg.out, "Root directory for run outputs")->capture_default_str();
  app.add_option("--run-name", cfg.run_name, "Run directory name (default <command>-<utc time>)");
  app.add_flag("--force", cfg.force, "Reuse an existing run directory");
  app.add_option("--encoder", cfg.encoder, "toy | precomputed")->capture_default_str();
  app.add_option("--d", cfg.d, "Embedding width")->capture_default_str();
  app.add_option("--d-g", cfg.d_g, "N-gram representation width (0 = d)")->capture_default_str();
  app.add_option("--w", cfg.mix_window, "Toy encoder mixing window (odd)")->capture_default_str();
  app.add_option("--k-max", cfg.k_max, "Longest n-gram")->capture_default_str();
  app.add_option("--min-freq", cfg.min_freq, "Vocabulary frequency cutoff")->capture_default_str();
  auto* o_epochs = app.add_option("--epochs", cfg.epochs)->capture_default_str();
  app.add_option("--lr", cfg.peak_lr, "Peak learning rate")->capture_default_str();
  app.add_option("--warmup", cfg.warmup_fraction, "Warmup fraction of all steps")->capture_default_str();
  app.add_option("--weight-decay", cfg.weight_decay)->capture_default_str();
  app.add_option("--grad-clip", cfg.grad_clip, "Global gradient norm clip (<= 0 disables)")->capture_default_str();
  app.add_option("--neg-cap", cfg.neg_cap, "Sampled negatives per training sample")->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  auto* o_max_tokens = app.add_option("--max-tokens", cfg.max_tokens, "Sample size N including specials")->capture_default_str();
  app.add_option("--block-size", cfg.block_size, "Encoder block size m")->capture_default_str();
  auto* o_c = app.add_option("--c", cfg.c, "Keyphrases returned per document")->capture_default_str();
  auto* o_k = app.add_option("--k-values", cfg.k_values, "Comma-separated K list")->delimiter(',')->capture_default_str();
  app.add_option("--folds", cfg.folds)->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "Parallel documents in extract/evaluate paths")->capture_default_str();
  app.add_option("--method", cfg.method, "jointkpe | tfidf | rake | textrank | all (cv takes a list)")->capture_default_str();
  app.add_option("--stopwords", cfg.stopwords, "en | pt | path to a list")->capture_default_str();
  app.add_option("--n-docs", cfg.n_docs)->capture_default_str();
  app.add_option("--min-words", cfg.min_words)->capture_default_str();
  app.add_option("--max-words", cfg.max_words)->capture_default_str();
  app.add_option("--configs", cfg.gc_configs, "Random gradient-check cases")->capture_default_str();
  app.add_option("--max-d", cfg.gc_max_d)->capture_default_str();
  app.add_option("--doc-tokens", cfg.gc_max_tokens, "Longest gradient-check document")->capture_default_str();
  app.add_option("--fd-eps", cfg.gc_eps)->capture_default_str();
  app.add_option("--tolerance", cfg.gc_tolerance)->capture_default_str();
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error")->capture_default_str();

  const std::map<std::string, std::function<int(Session&)>> commands = {
      {"build-vocab", cmd_build_vocab}, {"train", cmd_train},       {"extract", cmd_extract},
      {"baseline", cmd_baseline},       {"evaluate", cmd_evaluate}, {"cv", cmd_cv},
      {"synth", cmd_synth},             {"gradcheck", cmd_gradcheck},
  };
  const std::map<std::string, std::string> help = {
      {"build-vocab", "Build a vocabulary from a corpus"},
      {"train", "Train a model on an annotated corpus"},
      {"extract", "Extract ranked keyphrases with a trained model"},
      {"baseline", "Extract keyphrases with TF-IDF, RAKE or TextRank"},
      {"evaluate", "Score extraction files against corpus gold"},
      {"cv", "Word-balanced k-fold cross-validation"},
      {"synth", "Generate a synthetic planted-keyphrase corpus"},
      {"gradcheck", "Finite-difference gradient check on random toy models"},
  };
  for (const auto& [name, text] : help) app.add_subcommand(name, text);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  Session s;
  s.command = app.get_subcommands().front()->get_name();
  try {
    if (cfg.profile != "custom") {
      const ProfileDefaults pd = profile_defaults(cfg.profile);
      if (o_epochs->count() == 0) cfg.epochs = pd.epochs;
      if (o_k->count() == 0) cfg.k_values = pd.k_values;
      if (o_c->count() == 0) cfg.c = pd.c;
      if (o_max_tokens->count() == 0) cfg.max_tokens = pd.max_tokens;
    }
    (void)o_profile;
    validate(s.command, cfg);
    s.cfg = cfg;
    s.config_snapshot = app.config_to_str(true, false);
    reserve_run_dir(s);
    return commands.at(s.command)(s);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
}

}  // namespace jointkpe::cli

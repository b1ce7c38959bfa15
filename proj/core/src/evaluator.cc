#include "jointkpe/evaluator.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "jointkpe/error.h"
#include "jointkpe/parallel.h"
#include "jointkpe/text.h"

namespace jointkpe {
namespace {

std::vector<std::string> to_surfaces(const std::vector<ScoredPhrase>& ranked) {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& p : ranked) out.push_back(p.surface);
  return out;
}

DocumentResult score_document(const ChatDocument& doc, std::size_t fold,
                              std::span<const std::string> preds,
                              const std::vector<int>& k_values) {
  const auto gold = evaluation_gold(doc);
  DocumentResult r;
  r.doc_id = doc.id;
  r.fold = fold;
  r.gold_count = gold.size();
  for (int k : k_values) r.at_k.push_back(f1_at_k(preds, gold, k));
  return r;
}

}  // namespace

bool exact_match(std::string_view pred, std::string_view gold) {
  return normalize_phrase(pred) == normalize_phrase(gold);
}

Prf f1_at_k(std::span<const std::string> preds, std::span<const std::string> gold, int k) {
  if (k <= 0) Throw(ErrorKind::kArgument, "K must be positive, got " + std::to_string(k));
  std::unordered_set<std::string> open;
  for (const auto& g : gold) open.insert(normalize_phrase(g));
  const std::size_t gold_size = open.size();
  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), preds.size());
  Prf r;
  for (std::size_t i = 0; i < top; ++i) {
    if (open.erase(normalize_phrase(preds[i])) > 0) ++r.matched;
  }
  const double m = static_cast<double>(r.matched);
  r.precision = top == 0 ? 0.0 : m / static_cast<double>(top);
  r.recall = gold_size == 0 ? 0.0 : m / static_cast<double>(gold_size);
  const double s = r.precision + r.recall;
  r.f1 = s == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / s;
  return r;
}

void EvalConfig::validate() const {
  if (k_values.empty()) Throw(ErrorKind::kConfig, "at least one K value is required");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] <= 0) Throw(ErrorKind::kConfig, "K values must be positive");
    if (i > 0 && k_values[i] <= k_values[i - 1]) {
      Throw(ErrorKind::kConfig, "K values must be strictly increasing");
    }
  }
  if (n_folds < 2) Throw(ErrorKind::kConfig, "n_folds must be >= 2");
  if (c < 1) Throw(ErrorKind::kConfig, "c must be >= 1");
  rules.validate();
}

EvalConfig EvalConfig::grooming() {
  EvalConfig cfg;
  cfg.k_values = {40, 50, 60};
  cfg.c = 60;
  return cfg;
}

EvalConfig EvalConfig::drugs() {
  EvalConfig cfg;
  cfg.k_values = {20, 30, 40};
  cfg.c = 40;
  return cfg;
}

EvalReport summarize(std::string method, std::vector<int> k_values,
                     std::vector<DocumentResult> documents, std::size_t n_folds) {
  EvalReport rep;
  rep.method = std::move(method);
  rep.k_values = std::move(k_values);
  rep.documents = std::move(documents);
  const std::size_t nk = rep.k_values.size();
  rep.matched_gold.assign(nk, 0);
  rep.unmatched_gold.assign(nk, 0);
  std::vector<std::vector<Prf>> sums(n_folds, std::vector<Prf>(nk));
  std::vector<std::size_t> counts(n_folds, 0);
  for (const auto& d : rep.documents) {
    if (d.fold >= n_folds) Throw(ErrorKind::kArgument, "document fold out of range");
    ++counts[d.fold];
    for (std::size_t k = 0; k < nk; ++k) {
      sums[d.fold][k].precision += d.at_k[k].precision;
      sums[d.fold][k].recall += d.at_k[k].recall;
      sums[d.fold][k].f1 += d.at_k[k].f1;
      sums[d.fold][k].matched += d.at_k[k].matched;
      rep.matched_gold[k] += d.at_k[k].matched;
      rep.unmatched_gold[k] += d.gold_count - d.at_k[k].matched;
    }
  }
  rep.overall.assign(nk, Prf{});
  std::size_t used = 0;
  for (std::size_t f = 0; f < n_folds; ++f) {
    if (counts[f] == 0) continue;
    ++used;
    std::vector<Prf> mean(nk);
    const double n = static_cast<double>(counts[f]);
    for (std::size_t k = 0; k < nk; ++k) {
      mean[k] = {sums[f][k].precision / n, sums[f][k].recall / n, sums[f][k].f1 / n,
                 sums[f][k].matched};
      rep.overall[k].precision += mean[k].precision;
      rep.overall[k].recall += mean[k].recall;
      rep.overall[k].f1 += mean[k].f1;
      rep.overall[k].matched += mean[k].matched;
    }
    rep.fold_means.push_back(std::move(mean));
  }
  if (used > 0) {
    for (auto& p : rep.overall) {
      p.precision /= static_cast<double>(used);
      p.recall /= static_cast<double>(used);
      p.f1 /= static_cast<double>(used);
    }
  }
  return rep;
}

EvalReport evaluate_predictions(std::string method, const std::vector<ChatDocument>& docs,
                                const std::vector<std::vector<std::string>>& preds,
                                const std::vector<int>& k_values) {
  if (docs.size() != preds.size()) {
    Throw(ErrorKind::kArgument, "one prediction list per document is required");
  }
  std::vector<DocumentResult> results;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    results.push_back(score_document(docs[i], 0, preds[i], k_values));
  }
  return summarize(std::move(method), k_values, std::move(results), 1);
}

TfidfMethod::TfidfMethod(StopwordSet stopwords, std::size_t k_max)
    : stopwords_(std::move(stopwords)), k_max_(k_max) {}

void TfidfMethod::prepare(const std::vector<ChatDocument>& corpus) {
  idf_ = IdfTable::build(corpus);
}

std::vector<std::string> TfidfMethod::predict(const ChatDocument& doc, std::size_t c) const {
  if (idf_.n_docs() == 0) Throw(ErrorKind::kArgument, "TF-IDF used before prepare()");
  return to_surfaces(tfidf_extract(doc, idf_, c, k_max_, stopwords_));
}

RakeMethod::RakeMethod(StopwordSet stopwords, std::size_t k_max)
    : stopwords_(std::move(stopwords)), k_max_(k_max) {}

std::vector<std::string> RakeMethod::predict(const ChatDocument& doc, std::size_t c) const {
  return to_surfaces(rake_extract(doc, stopwords_, c, k_max_));
}

TextRankMethod::TextRankMethod(StopwordSet stopwords, TextRankOptions opts, std::size_t k_max)
    : stopwords_(std::move(stopwords)), opts_(opts), k_max_(k_max) {}

std::vector<std::string> TextRankMethod::predict(const ChatDocument& doc, std::size_t c) const {
  return to_surfaces(textrank_extract(doc, stopwords_, c, opts_, k_max_));
}

JointKpeMethod::JointKpeMethod(JointKpeSettings settings) : settings_(std::move(settings)) {
  settings_.train.validate();
  settings_.extract.validate();
}

void JointKpeMethod::fit(const std::vector<ChatDocument>& train_docs) {
  std::vector<ChatDocument> docs = train_docs;
  for (auto& d : docs) {
    if (d.gold_spans.empty() && !d.gold_keyphrases.empty()) annotate(d, settings_.rules);
  }
  vocab_ = build_vocab(docs, settings_.min_freq);
  params_ = init_model(settings_.model, vocab_.size());
  const TrainingSet set = make_training_set(docs, vocab_, settings_.model.k_max,
                                            settings_.extract.max_tokens,
                                            settings_.extract.block_size);
  TrainHooks hooks;
  hooks.on_epoch = settings_.on_epoch;
  last_ = train(set, params_, settings_.train, hooks);
  fitted_ = true;
}

std::vector<std::string> JointKpeMethod::predict(const ChatDocument& doc, std::size_t c) const {
  if (!fitted_) Throw(ErrorKind::kArgument, "JointKPE++ used before fit()");
  ExtractConfig cfg = settings_.extract;
  cfg.c = c;
  return surfaces(extract_document(doc, params_, vocab_, cfg));
}

std::unique_ptr<KeyphraseMethod> make_baseline(std::string_view name, StopwordSet stopwords,
                                               std::size_t k_max) {
  const std::string n = to_lower(name);
  if (n == "tfidf" || n == "tf-idf") return std::make_unique<TfidfMethod>(std::move(stopwords), k_max);
  if (n == "rake") return std::make_unique<RakeMethod>(std::move(stopwords), k_max);
  if (n == "textrank") {
    return std::make_unique<TextRankMethod>(std::move(stopwords), TextRankOptions{}, k_max);
  }
  Throw(ErrorKind::kConfig, "unknown baseline '" + std::string(name) + "'");
}

EvalReport run_cv(const std::vector<ChatDocument>& corpus, KeyphraseMethod& method,
                  const EvalConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ChatDocument> docs = corpus;
  for (auto& d : docs) annotate(d, cfg.rules);
  const FoldAssignment folds = make_folds(docs, cfg.n_folds, cfg.fold_seed);
  method.prepare(docs);

  std::vector<DocumentResult> results;
  for (std::size_t f = 0; f < cfg.n_folds; ++f) {
    std::vector<ChatDocument> train_docs;
    std::vector<const ChatDocument*> test_docs;
    for (const auto& d : docs) {
      if (folds.doc_to_fold.at(d.id) == f) {
        test_docs.push_back(&d);
      } else {
        train_docs.push_back(d);
      }
    }
    if (method.supervised()) {
      spdlog::info("{}: fold {}/{} training on {} documents", method.name(), f + 1, cfg.n_folds,
                   train_docs.size());
      method.fit(train_docs);
    }
    std::vector<DocumentResult> fold_results(test_docs.size());
    parallel_for(test_docs.size(), cfg.jobs, [&](std::size_t i) {
      const auto preds = method.predict(*test_docs[i], cfg.c);
      fold_results[i] = score_document(*test_docs[i], f, preds, cfg.k_values);
    });
    for (auto& r : fold_results) results.push_back(std::move(r));
  }
  EvalReport rep = summarize(method.name(), cfg.k_values, std::move(results), cfg.n_folds);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

void write_report_table(std::ostream& out, std::span<const EvalReport> reports) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %4s %9s %9s %9s\n", "Method", "K", "P(%)", "R(%)",
                "F1(%)");
  out << line;
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.k_values.size(); ++k) {
      std::snprintf(line, sizeof(line), "%-12s %4d %9.2f %9.2f %9.2f\n", r.method.c_str(),
                    r.k_values[k], 100.0 * r.overall[k].precision, 100.0 * r.overall[k].recall,
                    100.0 * r.overall[k].f1);
      out << line;
    }
  }
}

void write_per_document(std::ostream& out, const EvalReport& report) {
  out << "method\tdoc_id\tfold\tgold\tk\tprecision\trecall\tf1\tmatched\n";
  char buf[96];
  for (const auto& d : report.documents) {
    for (std::size_t k = 0; k < report.k_values.size(); ++k) {
      const Prf& p = d.at_k[k];
      std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f", p.precision, p.recall, p.f1);
      out << report.method << '\t' << d.doc_id << '\t' << d.fold << '\t' << d.gold_count << '\t'
          << report.k_values[k] << '\t' << buf << '\t' << p.matched << '\n';
    }
  }
}

}  // namespace jointkpe

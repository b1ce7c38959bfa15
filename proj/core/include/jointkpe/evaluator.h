#ifndef JOINTKPE_EVALUATOR_H_
#define JOINTKPE_EVALUATOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointkpe/baselines.h"
#include "jointkpe/corpus.h"
#include "jointkpe/extractor.h"
#include "jointkpe/kpe_core.h"
#include "jointkpe/trainer.h"

namespace jointkpe {

// Equality after lowercasing and whitespace collapsing.
bool exact_match(std::string_view pred, std::string_view gold);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matched = 0;
};

// Scores the top min(K, |preds|) predictions; each (deduplicated) gold phrase
// can be matched once. Throws kArgument for K <= 0.
Prf f1_at_k(std::span<const std::string> preds, std::span<const std::string> gold, int k);

struct EvalConfig {
  std::vector<int> k_values = {40, 50, 60};
  std::size_t n_folds = 5;
  std::uint64_t fold_seed = 0;
  std::size_t c = 60;  // candidates requested per document
  std::size_t jobs = 1;
  AlignmentRules rules = AlignmentRules::defaults();

  void validate() const;
  static EvalConfig grooming();
  static EvalConfig drugs();
};

struct DocumentResult {
  std::string doc_id;
  std::size_t fold = 0;
  std::size_t gold_count = 0;
  std::vector<Prf> at_k;  // parallel to k_values
};

struct EvalReport {
  std::string method;
  std::vector<int> k_values;
  std::vector<DocumentResult> documents;
  std::vector<std::vector<Prf>> fold_means;  // [fold][k]
  std::vector<Prf> overall;                  // mean of fold means, per k
  std::vector<std::size_t> matched_gold;     // per k, summed over documents
  std::vector<std::size_t> unmatched_gold;
  double wall_seconds = 0.0;
};

// Macro means per fold, then over folds. Folds without documents are skipped.
EvalReport summarize(std::string method, std::vector<int> k_values,
                     std::vector<DocumentResult> documents, std::size_t n_folds);

// Scores ranked predictions for each document against evaluation_gold().
// All documents are put in fold 0.
EvalReport evaluate_predictions(std::string method, const std::vector<ChatDocument>& docs,
                                const std::vector<std::vector<std::string>>& preds,
                                const std::vector<int>& k_values);

class KeyphraseMethod {
 public:
  virtual ~KeyphraseMethod() = default;
  virtual std::string name() const = 0;
  virtual bool supervised() const { return false; }
  // Sees every document's text once before cross-validation (no labels).
  virtual void prepare(const std::vector<ChatDocument>& /*corpus*/) {}
  virtual void fit(const std::vector<ChatDocument>& /*train*/) {}
  // Thread-safe after fit().
  virtual std::vector<std::string> predict(const ChatDocument& doc, std::size_t c) const = 0;
};

class TfidfMethod final : public KeyphraseMethod {
 public:
  explicit TfidfMethod(StopwordSet stopwords = StopwordSet::english(), std::size_t k_max = 7);
  std::string name() const override { return "TF-IDF"; }
  void prepare(const std::vector<ChatDocument>& corpus) override;
  std::vector<std::string> predict(const ChatDocument& doc, std::size_t c) const override;

 private:
  StopwordSet stopwords_;
  std::size_t k_max_;
  IdfTable idf_;
};

class RakeMethod final : public KeyphraseMethod {
 public:
  explicit RakeMethod(StopwordSet stopwords = StopwordSet::english(), std::size_t k_max = 7);
  std::string name() const override { return "RAKE"; }
  std::vector<std::string> predict(const ChatDocument& doc, std::size_t c) const override;

 private:
  StopwordSet stopwords_;
  std::size_t k_max_;
};

class TextRankMethod final : public KeyphraseMethod {
 public:
  explicit TextRankMethod(StopwordSet stopwords = StopwordSet::english(),
                          TextRankOptions opts = {}, std::size_t k_max = 7);
  std::string name() const override { return "TextRank"; }
  std::vector<std::string> predict(const ChatDocument& doc, std::size_t c) const override;

 private:
  StopwordSet stopwords_;
  TextRankOptions opts_;
  std::size_t k_max_;
};

struct JointKpeSettings {
  ModelConfig model;
  TrainConfig train;
  ExtractConfig extract;
  std::size_t min_freq = 1;
  AlignmentRules rules = AlignmentRules::defaults();
  // Called after each epoch with the fold's training set size.
  std::function<void(const EpochLog&)> on_epoch;
};

// Builds a vocabulary from the training documents, trains a fresh model and
// extracts with it.
class JointKpeMethod final : public KeyphraseMethod {
 public:
  explicit JointKpeMethod(JointKpeSettings settings);
  std::string name() const override { return "JointKPE++"; }
  bool supervised() const override { return true; }
  void fit(const std::vector<ChatDocument>& train) override;
  std::vector<std::string> predict(const ChatDocument& doc, std::size_t c) const override;

  const ModelParams& params() const { return params_; }
  const Vocabulary& vocab() const { return vocab_; }
  const TrainResult& last_training() const { return last_; }

 private:
  JointKpeSettings settings_;
  Vocabulary vocab_;
  ModelParams params_;
  TrainResult last_;
  bool fitted_ = false;
};

std::unique_ptr<KeyphraseMethod> make_baseline(std::string_view name, StopwordSet stopwords,
                                               std::size_t k_max = 7);

// Word-balanced folds from make_folds; for each fold the method is fitted on
// the other folds (supervised methods only) and scored on the held-out one.
// Documents are annotated with cfg.rules first.
EvalReport run_cv(const std::vector<ChatDocument>& corpus, KeyphraseMethod& method,
                  const EvalConfig& cfg);

// One row per method x K, values in percent.
void write_report_table(std::ostream& out, std::span<const EvalReport> reports);
// Tab-separated per-document scores with a header line.
void write_per_document(std::ostream& out, const EvalReport& report);

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_docs = 50;
  std::size_t min_words = 600;
  std::size_t max_words = 4000;
  std::size_t min_planted = 5;
  std::size_t max_planted = 15;
  std::size_t min_phrase_len = 1;
  std::size_t max_phrase_len = 7;
  std::size_t min_repeats = 1;
  std::size_t max_repeats = 4;
  std::size_t min_line_words = 5;
  std::size_t max_line_words = 15;
  double zipf_exponent = 1.0;
  // Draw each document's phrases from one seeded inventory that partitions
  // the plant vocabulary, so keyphrases recur across documents. When false,
  // every document gets fresh phrases of distinct plant words.
  bool shared_inventory = true;
  // Empty means default_plant_vocab() / default_filler_vocab().
  std::vector<std::string> plant_vocab;
  std::vector<std::string> filler_vocab;
};

// Pronounceable pseudo-words; the two defaults never share a word.
std::vector<std::string> default_plant_vocab();
std::vector<std::string> default_filler_vocab();

// Filler text drawn from a Zipf distribution over filler_vocab with gold
// phrases of plant words planted at distinct gaps, one line per 5-15 words.
// Planted phrases never touch each other.
// Throws kArgument if the vocabularies overlap or a range is inverted.
std::vector<ChatDocument> synth_corpus(const SynthConfig& cfg);

}  // namespace jointkpe

#endif  // JOINTKPE_EVALUATOR_H_

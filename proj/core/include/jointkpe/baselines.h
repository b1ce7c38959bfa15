#ifndef JOINTKPE_BASELINES_H_
#define JOINTKPE_BASELINES_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "jointkpe/corpus.h"

namespace jointkpe {

struct ScoredPhrase {
  std::string surface;
  double score = 0.0;
};

struct StopwordSet {
  std::unordered_set<std::string> words;
  std::string source;

  bool contains(std::string_view w) const { return words.contains(std::string(w)); }
  bool empty() const { return words.empty(); }

  static StopwordSet english();
  static StopwordSet portuguese();
  // One word per line, '#' comments allowed; words are lowercased.
  static StopwordSet load(const std::filesystem::path& path);
};

class IdfTable {
 public:
  IdfTable() = default;
  // Document frequency of every lexical token over `docs`.
  static IdfTable build(const std::vector<ChatDocument>& docs);

  // ln(n_docs / (1 + df)) + 1; unseen tokens get df = 0.
  double idf(std::string_view token) const;
  std::size_t doc_freq(std::string_view token) const;
  std::size_t n_docs() const { return n_docs_; }

 private:
  std::unordered_map<std::string, std::size_t> doc_freq_;
  std::size_t n_docs_ = 0;
};

// n-grams up to k_max that neither start nor end with a stopword or a
// punctuation token, scored by the mean tf * idf of their tokens.
std::vector<ScoredPhrase> tfidf_extract(const ChatDocument& doc, const IdfTable& idf,
                                        std::size_t c, std::size_t k_max = 7,
                                        const StopwordSet& stopwords = StopwordSet::english());

// Candidate phrases are maximal runs of non-stopword, non-punctuation tokens
// within one line; phrases longer than k_max still feed the co-occurrence
// statistics but are not returned.
std::vector<ScoredPhrase> rake_extract(const ChatDocument& doc, const StopwordSet& stopwords,
                                       std::size_t c, std::size_t k_max = 7);

struct TextRankOptions {
  std::size_t window = 2;
  double damping = 0.85;
  double tol = 1e-6;
  std::size_t max_iter = 100;
};

struct TextRankResult {
  std::vector<double> raw;         // fixed point of the power iteration
  std::vector<double> normalized;  // raw / sum(raw)
  std::size_t iterations = 0;
  double last_delta = 0.0;  // L1 change of the final iteration
  bool converged = false;
};

// PageRank over an undirected graph given as adjacency lists, uniform start.
// Isolated nodes keep the teleport mass (1 - damping) / N.
TextRankResult textrank_scores(const std::vector<std::vector<std::size_t>>& adjacency,
                               const TextRankOptions& opts = {});

// Word graph over the content-word sequence (stopwords and punctuation
// removed) with edges between words at most window - 1 apart; the top third
// of words by score seed phrases, adjacent seeds in the text merge, and a
// phrase scores the sum of its word scores. Runs longer than k_max are
// dropped.
std::vector<ScoredPhrase> textrank_extract(const ChatDocument& doc,
                                           const StopwordSet& stopwords, std::size_t c,
                                           const TextRankOptions& opts = {},
                                           std::size_t k_max = 7);

}  // namespace jointkpe

#endif  // JOINTKPE_BASELINES_H_

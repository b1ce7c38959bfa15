#ifndef JOINTKPE_EXTRACTOR_H_
#define JOINTKPE_EXTRACTOR_H_

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointkpe/corpus.h"
#include "jointkpe/kpe_core.h"
#include "jointkpe/tokenizer.h"

namespace jointkpe {

inline constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

struct PhraseCandidate {
  std::string surface;  // normalized source text of the best occurrence
  PhraseKey token_key;
  double score = 0.0;
  std::size_t sample = 0;
  std::size_t token_pos = 0;  // document token index of the best occurrence
  std::size_t n = 0;
};

// Strict ranking order: score desc, earlier best occurrence, surface.
bool ranks_before(const PhraseCandidate& a, const PhraseCandidate& b);

// Candidate hygiene: drops phrases that start or end with a punctuation token
// (which covers punctuation-only phrases) and phrases containing [UNK],
// whose key cannot stand for one surface.
bool keep_candidate(const PhraseKey& key, const Vocabulary& vocab);

// One candidate per phrase key of the table, scored by its global max,
// ranked and truncated to c. `text` is the document the table was built from.
std::vector<PhraseCandidate> get_candidates(const NGramScoreTable& table,
                                            const TokenizedDocument& tdoc,
                                            std::string_view text, const Vocabulary& vocab,
                                            std::size_t c, std::size_t sample_index = 0);

// Union by key keeping the highest score (ties keep the lower sample index),
// re-ranked and truncated to c.
std::vector<PhraseCandidate> merge_samples(
    std::span<const std::vector<PhraseCandidate>> per_sample, std::size_t c);

struct ExtractConfig {
  std::size_t c = 60;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t block_size = kDefaultBlockSize;

  void validate() const;
};

// Per-sample candidate lists are merged before truncation, so every returned
// score is the phrase's maximum over all samples.
std::vector<PhraseCandidate> extract_tokenized(const TokenizedDocument& tdoc,
                                               std::string_view text,
                                               const ModelParams& params,
                                               const Vocabulary& vocab,
                                               const ExtractConfig& cfg,
                                               const PrecomputedStore* store = nullptr);

std::vector<PhraseCandidate> extract_document(const ChatDocument& doc,
                                              const ModelParams& params,
                                              const Vocabulary& vocab,
                                              const ExtractConfig& cfg,
                                              const PrecomputedStore* store = nullptr);

// `rank<TAB>score<TAB>surface` lines, rank starting at 1.
void write_candidates(std::ostream& out, std::span<const PhraseCandidate> ranked);

std::vector<std::string> surfaces(std::span<const PhraseCandidate> ranked);

}  // namespace jointkpe

#endif  // JOINTKPE_EXTRACTOR_H_

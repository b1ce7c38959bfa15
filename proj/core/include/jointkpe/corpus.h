#ifndef JOINTKPE_CORPUS_H_
#define JOINTKPE_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "jointkpe/text.h"

namespace jointkpe {

// An aligned occurrence of gold keyphrase `phrase_index` in the document.
struct GoldSpan {
  std::size_t phrase_index = 0;
  CharSpan span;

  bool operator==(const GoldSpan&) const = default;
};

// A full chat log (messages in sequential order) with its annotations.
struct ChatDocument {
  std::string id;
  std::string text;
  std::vector<std::string> gold_keyphrases;
  std::vector<GoldSpan> gold_spans;  // empty until annotate() runs
  std::size_t word_count = 0;        // whitespace-delimited tokens of text
};

// Builds a document and fills word_count.
ChatDocument make_document(std::string id, std::string text,
                           std::vector<std::string> keyphrases);

// Rules used to find normalized annotations in raw chat text. Tried in
// precedence order exact > lexicon > suffix > edit distance.
struct AlignmentRules {
  // normalized form -> chat variants, e.g. "want to" -> {"wanna"}.
  std::map<std::string, std::vector<std::string>> abbreviation_lexicon;
  bool allow_suffix_match = true;
  std::size_t max_suffix_length = 4;
  int max_edit_distance = 1;
  // Words shorter than this never take the edit-distance route.
  std::size_t min_edit_word_length = 4;

  // Throws kValidation if keys/variants are not lowercase or the edit
  // distance is outside [0, 2].
  void validate() const;

  // Starter lexicon of common chat abbreviations.
  static AlignmentRules defaults();
};

// Reads `normalized<TAB>variant1,variant2` lines and merges them into
// `base`. Blank lines and lines starting with '#' are ignored.
AlignmentRules load_lexicon(const std::filesystem::path& path,
                            AlignmentRules base = {});

// Line-delimited JSON records {"id", "text", "keyphrases"}. Documents are
// returned in file order with word_count filled and no spans.
std::vector<ChatDocument> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path,
                 const std::vector<ChatDocument>& docs);

// Every non-overlapping span of doc.text matching `phrase`, sorted by start.
// The first rule stage that produces any match wins.
std::vector<CharSpan> align_keyphrase(std::string_view phrase,
                                      const ChatDocument& doc,
                                      const AlignmentRules& rules);

struct AnnotationStats {
  std::size_t aligned_phrases = 0;
  std::size_t total_spans = 0;
  std::vector<std::string> unaligned;
};

// Fills doc.gold_spans from doc.gold_keyphrases. Unalignable phrases stay in
// the gold list and are reported.
AnnotationStats annotate(ChatDocument& doc, const AlignmentRules& rules);

// Gold list used for scoring: each aligned phrase is replaced by the
// normalized original text of its first span, unaligned phrases are kept
// as annotated. Duplicates are collapsed, first occurrence wins.
std::vector<std::string> evaluation_gold(const ChatDocument& doc);

struct FoldAssignment {
  std::size_t n_folds = 0;
  std::map<std::string, std::size_t> doc_to_fold;
  std::vector<std::size_t> fold_word_totals;

  // max / min of fold_word_totals (infinity if some fold is empty of words).
  double balance_ratio() const;
};

// Greedy longest-processing-time split balancing total words per fold.
FoldAssignment make_folds(const std::vector<ChatDocument>& docs,
                          std::size_t n_folds, std::uint64_t seed);

}  // namespace jointkpe

#endif  // JOINTKPE_CORPUS_H_

#ifndef JOINTKPE_TOKENIZER_H_
#define JOINTKPE_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jointkpe/corpus.h"
#include "jointkpe/text.h"

namespace jointkpe {

using TokenId = std::int32_t;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr std::size_t kNumSpecials = 4;

  // Specials only.
  Vocabulary();

  // Appends a regular token; returns its id (existing id if already present).
  TokenId add(std::string_view token);

  // Unknown tokens map to kUnk.
  TokenId lookup(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return id_to_token_.size(); }

  static bool is_special(TokenId id) { return id >= 0 && id < TokenId(kNumSpecials); }

  // One regular token per line; line i holds id kNumSpecials + i.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// All lowercase lexical tokens with corpus frequency >= min_freq, ordered by
// frequency desc then lexicographically.
Vocabulary build_vocab(const std::vector<ChatDocument>& docs, std::size_t min_freq);

// (start, length) in document token coordinates.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const { return start + length; }
  bool operator==(const TokenSpan&) const = default;
  auto operator<=>(const TokenSpan&) const = default;
};

struct TokenizedDocument {
  std::string doc_id;
  std::vector<TokenId> token_ids;  // content tokens only
  std::vector<CharSpan> offsets;   // one per token
  std::vector<TokenSpan> gold_label_spans;
  std::size_t dropped_gold_spans = 0;  // misaligned with tokens or too long
};

// Lowercase, split on whitespace and punctuation, map through the vocabulary.
// Gold character spans become token spans when both boundaries coincide with
// token boundaries and the span is at most k_max tokens long.
TokenizedDocument tokenize(const ChatDocument& doc, const Vocabulary& vocab,
                           std::size_t k_max = 7);

// Encoder input: CLS + content + SEP.
struct TokenBlock {
  std::vector<TokenId> ids;
  std::size_t content_begin = 0;  // token index into the parent document
  std::size_t content_end = 0;

  std::size_t size() const { return ids.size(); }
  std::size_t content_size() const { return content_end - content_begin; }
};

inline constexpr std::size_t kDefaultBlockSize = 512;
inline constexpr std::size_t kDefaultMaxTokens = 8192;

// Greedy pieces of m - 2 content tokens, each wrapped with CLS/SEP.
std::vector<TokenBlock> split_blocks(const TokenizedDocument& tdoc,
                                     std::size_t m = kDefaultBlockSize);

// Same, restricted to document tokens [begin, end).
std::vector<TokenBlock> split_range(const TokenizedDocument& tdoc, std::size_t begin,
                                    std::size_t end, std::size_t m = kDefaultBlockSize);

struct SampleSequence {
  std::vector<TokenBlock> blocks;
  std::size_t total_tokens = 0;  // including specials
  std::size_t content_begin = 0;
  std::size_t content_end = 0;
  std::size_t first_block_index = 0;  // document-wide numbering of blocks[0]
  std::vector<TokenSpan> gold_label_spans;  // spans fully inside this sample
  std::size_t dropped_gold_spans = 0;       // spans crossing a sample edge
};

// Balanced split into ceil(L / C) samples, C = floor(N / m) * (m - 2); part
// sizes differ by at most one with the remainder going to the earliest.
std::vector<SampleSequence> split_samples(const TokenizedDocument& tdoc,
                                          std::size_t max_tokens = kDefaultMaxTokens,
                                          std::size_t m = kDefaultBlockSize);

}  // namespace jointkpe

#endif  // JOINTKPE_TOKENIZER_H_

#ifndef JOINTKPE_ENCODER_H_
#define JOINTKPE_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "jointkpe/tensor.h"
#include "jointkpe/tokenizer.h"

namespace jointkpe {

// Trainable stand-in for a transformer encoder: each output row is the mean
// of the embedding rows in a centered window of width mix_window around the
// token, clipped at the block edges. mix_window == 1 is a pure lookup.
struct EncoderParams {
  Matrix embedding_table;  // vocab_size x d
  int mix_window = 1;
  bool trainable = true;

  std::size_t d() const { return static_cast<std::size_t>(embedding_table.cols()); }
  std::size_t vocab_size() const { return static_cast<std::size_t>(embedding_table.rows()); }
  void validate() const;
};

// Uniform init in [-0.5/d, 0.5/d].
EncoderParams init_encoder(std::size_t vocab_size, std::size_t d, int mix_window,
                           std::uint64_t seed);

// |block| x d.
Matrix encode_block(const TokenBlock& block, const EncoderParams& params);

// Accumulates d(loss)/d(table) given d(loss)/d(rows) for one block.
void encode_block_backward(const TokenBlock& block, const EncoderParams& params,
                           const Eigen::Ref<const Matrix>& d_rows, Matrix& d_table);

struct RowOrigin {
  std::size_t sample = 0;
  std::size_t block = 0;         // index within the sample
  std::size_t within_block = 0;  // row index inside the block
};

// Concatenated per-block encodings of one sample.
struct SequenceEmbedding {
  Matrix values;                      // L x d
  std::vector<RowOrigin> origins;     // per row
  std::vector<std::uint8_t> special;  // 1 for CLS/SEP rows
  std::vector<TokenId> ids;           // per row; filled when blocks are known
  std::vector<std::ptrdiff_t> doc_position;  // document token index, -1 for specials
  std::vector<std::pair<std::size_t, std::size_t>> block_rows;  // [begin, end) per block

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(values.cols()); }
};

// Vertical concatenation in block order; first and last row of every block
// are marked special.
SequenceEmbedding concat_blocks(std::span<const Matrix> subseqs, std::size_t sample = 0);

// As above, and records token ids and document positions from the blocks.
SequenceEmbedding concat_blocks(std::span<const TokenBlock> blocks,
                                std::span<const Matrix> subseqs, std::size_t sample = 0);

// Read-only store of externally computed block embeddings: a directory of
// `<doc_id>.<block>.f32` row-major little-endian float32 matrices plus a
// `manifest.tsv` of `doc_id<TAB>block<TAB>rows<TAB>d` lines.
class PrecomputedStore {
 public:
  explicit PrecomputedStore(std::filesystem::path dir);

  std::size_t d() const { return d_; }
  const std::filesystem::path& dir() const { return dir_; }

  // Block numbering is document-wide across samples.
  Matrix load_block(const std::string& doc_id, std::size_t block,
                    std::size_t expected_rows) const;

 private:
  std::filesystem::path dir_;
  std::size_t d_ = 0;
  std::map<std::pair<std::string, std::size_t>, std::size_t> rows_;
};

void write_precomputed_block(const std::filesystem::path& dir, const std::string& doc_id,
                             std::size_t block, const Matrix& values);
// Writes manifest.tsv listing (doc_id, block, rows, d) entries.
void write_precomputed_manifest(const std::filesystem::path& dir,
                                const std::vector<std::tuple<std::string, std::size_t,
                                                             std::size_t, std::size_t>>& entries);

// All blocks of the document, as split by split_samples(tdoc, N, m), in order.
std::vector<Matrix> load_precomputed(const std::filesystem::path& dir,
                                     const TokenizedDocument& tdoc,
                                     std::size_t max_tokens = kDefaultMaxTokens,
                                     std::size_t m = kDefaultBlockSize);

}  // namespace jointkpe

#endif  // JOINTKPE_ENCODER_H_

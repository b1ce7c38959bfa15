#ifndef JOINTKPE_KPE_CORE_H_
#define JOINTKPE_KPE_CORE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "jointkpe/encoder.h"
#include "jointkpe/tensor.h"
#include "jointkpe/tokenizer.h"

namespace jointkpe {

// Token-id tuple identifying a phrase independent of where it occurs.
using PhraseKey = std::vector<TokenId>;

struct PhraseKeyHash {
  std::size_t operator()(const PhraseKey& key) const noexcept;
};

using PhraseKeySet = std::unordered_set<PhraseKey, PhraseKeyHash>;

// One 1-D convolution per n-gram size. kernels[n-1] is (n*d) x d_g, with
// rows [j*d, (j+1)*d) holding the weights applied to window offset j.
struct Cnn2GramParams {
  std::size_t k_max = 7;
  std::size_t d = 0;
  std::size_t d_g = 0;
  std::vector<Matrix> kernels;
  std::vector<Vector> biases;

  void validate() const;
};

struct HeadParams {
  Vector rank_w;
  double rank_b = 0.0;
  Vector chunk_w;
  double chunk_b = 0.0;
};

enum class EncoderKind : std::uint32_t { kToy = 0, kPrecomputed = 1 };

// A named view of one parameter tensor.
struct TensorRef {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double* data = nullptr;
  bool trainable = true;

  std::size_t size() const { return rows * cols; }
  std::span<double> values() const { return {data, size()}; }
};

// Everything the optimizer updates.
struct ModelParams {
  EncoderKind encoder_kind = EncoderKind::kToy;
  EncoderParams encoder;  // 0 x d table when precomputed
  Cnn2GramParams cnn;
  HeadParams heads;

  std::size_t d() const { return cnn.d; }
  std::size_t d_g() const { return cnn.d_g; }
  std::size_t k_max() const { return cnn.k_max; }

  // Tensors in serialization order: embedding, kernel[1..k], bias[1..k],
  // rank_w, rank_b, chunk_w, chunk_b.
  std::vector<TensorRef> tensors();
  std::vector<TensorRef> tensors() const;

  // Same shapes, all zero.
  ModelParams zeros_like() const;
  std::size_t parameter_count() const;
  void validate() const;
};

struct ModelConfig {
  std::size_t d = 64;
  std::size_t d_g = 0;  // 0 means d_g = d
  std::size_t k_max = 7;
  int mix_window = 1;
  EncoderKind encoder_kind = EncoderKind::kToy;
  std::uint64_t seed = 0;
};

// Embeddings uniform in [-0.5/d, 0.5/d]; kernels Glorot-uniform over
// (n*d, d_g); heads uniform in [-1/sqrt(d_g), 1/sqrt(d_g)]; biases zero.
ModelParams init_model(const ModelConfig& cfg, std::size_t vocab_size);

// ---------------------------------------------------------------------------
// Forward

struct NGramLayer {
  std::size_t n = 0;
  std::vector<std::size_t> starts;  // first sequence row of every valid window
  Matrix pre;                       // windows x d_g
  Matrix act;                       // ReLU(pre)
};

struct NGramReps {
  std::vector<NGramLayer> layers;  // layers[n-1]
  // Projection cache: each distinct content row of the sequence is projected
  // once through every (n, offset) kernel slice.
  std::vector<std::ptrdiff_t> row_group;  // per sequence row, -1 for specials
  Matrix unique_rows;                     // groups x d
  Matrix projected;                       // groups x (d_g * k(k+1)/2)
};

// Column offset of the (n, offset) kernel slice in the stacked projection.
std::size_t projection_offset(std::size_t n, std::size_t offset, std::size_t d_g);

// kernels concatenated column-wise in projection_offset order: d x cols.
Matrix stack_kernels(const Cnn2GramParams& params);

// out (rows x cols) = x (rows x d) * k (d x cols), accumulating each output
// element over the d inputs in increasing index order.
void project_rows(const Matrix& x, const Matrix& k, Matrix& out);

// ReLU(sum_j seq[pos + j] * kernel_n[j] + bias_n) for every window of n rows
// that contains no CLS/SEP row. Per output element the sum is formed as the
// ordered dot product of each offset, then the offsets added in order, then
// the bias.
NGramReps cnn2gram(const SequenceEmbedding& seq, const Cnn2GramParams& params);

struct NGramScores {
  std::size_t n = 0;
  std::vector<std::size_t> starts;             // sequence row
  std::vector<std::ptrdiff_t> token_starts;    // document token index
  std::vector<PhraseKey> keys;
  Vector rank;   // localized informativeness scores
  Vector chunk;  // chunking logits (no sigmoid)
};

struct NGramScoreTable {
  std::vector<NGramScores> layers;  // layers[n-1]

  std::size_t window_count() const;
  bool empty() const { return window_count() == 0; }
};

// Linear ranking and chunking heads over every window representation.
// Dot products accumulate in increasing index order, then add the bias.
NGramScoreTable head_scores(const SequenceEmbedding& seq, const NGramReps& reps,
                            const HeadParams& heads);

struct Occurrence {
  std::size_t layer = 0;   // n - 1
  std::size_t window = 0;  // index into the layer
};

struct GlobalCandidate {
  PhraseKey key;
  double score = 0.0;  // max of localized rank scores
  Occurrence best;     // first occurrence reaching the max
  std::size_t count = 0;
};

struct GlobalScores {
  // In first-occurrence order (by n, then position).
  std::vector<GlobalCandidate> candidates;
  std::unordered_map<PhraseKey, std::size_t, PhraseKeyHash> index;
};

// Max-pools localized rank scores per phrase key.
GlobalScores global_pool(const NGramScoreTable& table);

// ---------------------------------------------------------------------------
// Losses

struct RankLoss {
  bool skipped = false;  // no positive or no negative candidate in the sample
  double loss = 0.0;
  std::vector<double> d_score;  // per global candidate
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  std::size_t pair_count = 0;
};

// Mean over (positive, sampled negative) pairs of max(0, 1 - s_pos + s_neg).
// Negatives are up to neg_sample_cap non-gold candidates drawn uniformly
// without replacement from a stream seeded by `seed`.
RankLoss margin_rank_loss(const GlobalScores& globals, const PhraseKeySet& gold_keys,
                          std::size_t neg_sample_cap, std::uint64_t seed);

inline constexpr double kLogitClamp = 30.0;

struct ChunkLoss {
  double loss = 0.0;
  std::vector<Vector> d_logits;  // per layer
  std::size_t positive_labels = 0;
  std::size_t windows = 0;
};

// Mean binary cross-entropy over every window; a window is positive iff its
// (token start, n) equals a gold label span.
ChunkLoss chunk_bce_loss(const NGramScoreTable& table, std::span<const TokenSpan> gold_spans);

struct LossBreakdown {
  double loss_rank = 0.0;
  double loss_chunk = 0.0;
  double loss_kpe = 0.0;
  std::size_t pair_count = 0;
  std::size_t label_count = 0;
  bool rank_skipped = false;
};

// Unweighted sum. Pass std::nullopt for a skipped ranking loss.
LossBreakdown combined_loss(std::optional<double> loss_rank, double loss_chunk,
                            std::size_t pair_count = 0, std::size_t label_count = 0);

// ---------------------------------------------------------------------------
// Whole-sample helpers and backward

struct ForwardState {
  SequenceEmbedding seq;
  NGramReps reps;
  NGramScoreTable table;
};

// Encodes every block of the sample (toy encoder or precomputed store), then
// runs cnn2gram and both heads.
ForwardState forward_sample(const ModelParams& params, const TokenizedDocument& tdoc,
                            const SampleSequence& sample, std::size_t sample_index = 0,
                            const PrecomputedStore* store = nullptr);

// Upstream gradients with respect to the score table.
struct ScoreGrads {
  std::vector<Vector> d_rank;
  std::vector<Vector> d_chunk;

  static ScoreGrads zeros_like(const NGramScoreTable& table);
};

// Routes per-candidate gradients to the argmax window of each candidate.
void add_global_gradient(const GlobalScores& globals, std::span<const double> d_score,
                         ScoreGrads& grads);

// Reverse-mode gradients of all parameters. The embedding table gradient is
// filled only for a trainable toy encoder.
ModelParams backward(const ModelParams& params, const ForwardState& state,
                     const SampleSequence& sample, const ScoreGrads& grads);

// Keys of every gold label span of the document.
PhraseKeySet gold_keys(const TokenizedDocument& tdoc);

struct SampleLoss {
  LossBreakdown breakdown;
  ScoreGrads grads;
};

// loss_kpe of one sample and its gradient with respect to the score table.
SampleLoss sample_loss(const ForwardState& state, const PhraseKeySet& gold,
                       std::span<const TokenSpan> gold_spans, std::size_t neg_sample_cap,
                       std::uint64_t seed);

}  // namespace jointkpe

#endif  // JOINTKPE_KPE_CORE_H_

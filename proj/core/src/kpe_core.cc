#include "jointkpe/kpe_core.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "jointkpe/error.h"
#include "jointkpe/rng.h"

namespace jointkpe {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) Throw(ErrorKind::kArgument, what);
}

double ordered_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::uint64_t row_hash(const double* row, std::size_t d) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(row);
  for (std::size_t i = 0; i < d * sizeof(double); ++i) {
    h = (h ^ bytes[i]) * 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::size_t PhraseKeyHash::operator()(const PhraseKey& key) const noexcept {
  std::uint64_t h = 1469598103934665603ULL ^ key.size();
  for (TokenId id : key) {
    h = (h ^ static_cast<std::uint32_t>(id)) * 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

void Cnn2GramParams::validate() const {
  require(k_max >= 1, "k_max must be >= 1");
  require(d >= 1 && d_g >= 1, "d and d_g must be >= 1");
  require(kernels.size() == k_max && biases.size() == k_max,
          "expected one kernel and bias per n-gram size");
  for (std::size_t n = 1; n <= k_max; ++n) {
    const auto& k = kernels[n - 1];
    require(static_cast<std::size_t>(k.rows()) == n * d &&
                static_cast<std::size_t>(k.cols()) == d_g,
            "kernel[" + std::to_string(n) + "] has wrong shape");
    require(static_cast<std::size_t>(biases[n - 1].size()) == d_g,
            "bias[" + std::to_string(n) + "] has wrong shape");
  }
}

std::vector<TensorRef> ModelParams::tensors() {
  std::vector<TensorRef> out;
  auto add = [&](std::string name, auto& m, bool trainable) {
    out.push_back({std::move(name), static_cast<std::size_t>(m.rows()),
                   static_cast<std::size_t>(m.cols()), m.data(), trainable});
  };
  add("embedding", encoder.embedding_table,
      encoder_kind == EncoderKind::kToy && encoder.trainable);
  for (std::size_t n = 1; n <= cnn.kernels.size(); ++n) {
    add("kernel[" + std::to_string(n) + "]", cnn.kernels[n - 1], true);
  }
  for (std::size_t n = 1; n <= cnn.biases.size(); ++n) {
    add("bias[" + std::to_string(n) + "]", cnn.biases[n - 1], true);
  }
  add("rank_w", heads.rank_w, true);
  out.push_back({"rank_b", 1, 1, &heads.rank_b, true});
  add("chunk_w", heads.chunk_w, true);
  out.push_back({"chunk_b", 1, 1, &heads.chunk_b, true});
  return out;
}

std::vector<TensorRef> ModelParams::tensors() const {
  return const_cast<ModelParams*>(this)->tensors();
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& t : z.tensors()) std::fill(t.values().begin(), t.values().end(), 0.0);
  return z;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

void ModelParams::validate() const {
  cnn.validate();
  if (encoder_kind == EncoderKind::kToy) {
    encoder.validate();
    require(encoder.d() == cnn.d, "encoder width does not match convolution input width");
  }
  require(static_cast<std::size_t>(heads.rank_w.size()) == cnn.d_g &&
              static_cast<std::size_t>(heads.chunk_w.size()) == cnn.d_g,
          "head width does not match d_g");
  for (const auto& t : tensors()) {
    for (double v : t.values()) {
      if (!std::isfinite(v)) Throw(ErrorKind::kNumeric, "parameter " + t.name + " is not finite");
    }
  }
}

ModelParams init_model(const ModelConfig& cfg, std::size_t vocab_size) {
  require(cfg.d >= 1, "d must be >= 1");
  require(cfg.k_max >= 1, "k_max must be >= 1");
  ModelParams p;
  p.encoder_kind = cfg.encoder_kind;
  const std::size_t d = cfg.d;
  const std::size_t d_g = cfg.d_g == 0 ? cfg.d : cfg.d_g;
  if (cfg.encoder_kind == EncoderKind::kToy) {
    p.encoder = init_encoder(vocab_size, d, cfg.mix_window, cfg.seed);
  } else {
    p.encoder.embedding_table.resize(0, static_cast<Eigen::Index>(d));
    p.encoder.mix_window = cfg.mix_window;
    p.encoder.trainable = false;
  }
  p.cnn.k_max = cfg.k_max;
  p.cnn.d = d;
  p.cnn.d_g = d_g;
  Rng rng(derive_seed(cfg.seed, 202));
  for (std::size_t n = 1; n <= cfg.k_max; ++n) {
    Matrix k(static_cast<Eigen::Index>(n * d), static_cast<Eigen::Index>(d_g));
    const double a = std::sqrt(6.0 / static_cast<double>(n * d + d_g));
    for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = uniform_real(rng, -a, a);
    p.cnn.kernels.push_back(std::move(k));
    p.cnn.biases.push_back(Vector::Zero(static_cast<Eigen::Index>(d_g)));
  }
  const double h = 1.0 / std::sqrt(static_cast<double>(d_g));
  p.heads.rank_w.resize(static_cast<Eigen::Index>(d_g));
  p.heads.chunk_w.resize(static_cast<Eigen::Index>(d_g));
  for (Eigen::Index i = 0; i < p.heads.rank_w.size(); ++i) {
    p.heads.rank_w[i] = uniform_real(rng, -h, h);
  }
  for (Eigen::Index i = 0; i < p.heads.chunk_w.size(); ++i) {
    p.heads.chunk_w[i] = uniform_real(rng, -h, h);
  }
  return p;
}

std::size_t projection_offset(std::size_t n, std::size_t offset, std::size_t d_g) {
  return d_g * (n * (n - 1) / 2 + offset);
}

Matrix stack_kernels(const Cnn2GramParams& params) {
  const std::size_t cols = projection_offset(params.k_max + 1, 0, params.d_g);
  const auto d = static_cast<Eigen::Index>(params.d);
  const auto dg = static_cast<Eigen::Index>(params.d_g);
  Matrix k(d, static_cast<Eigen::Index>(cols));
  for (std::size_t n = 1; n <= params.k_max; ++n) {
    for (std::size_t j = 0; j < n; ++j) {
      k.middleCols(static_cast<Eigen::Index>(projection_offset(n, j, params.d_g)), dg) =
          params.kernels[n - 1].middleRows(static_cast<Eigen::Index>(j) * d, d);
    }
  }
  return k;
}

namespace {

using V4 = double __attribute__((vector_size(32)));

inline V4 load4(const double* p) {
  V4 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

// 4 x 16 output tile kept in registers across the whole reduction. Each lane
// accumulates a ascending exactly like the scalar loop.
void project_tile(const double* x, std::size_t d, const double* k, std::size_t cols,
                  double* out) {
  V4 acc[4][4] = {};
  for (std::size_t a = 0; a < d; ++a) {
    const double* krow = k + a * cols;
    const V4 k0 = load4(krow), k1 = load4(krow + 4), k2 = load4(krow + 8), k3 = load4(krow + 12);
    for (std::size_t r = 0; r < 4; ++r) {
      const double xa = x[r * d + a];
      acc[r][0] += xa * k0;
      acc[r][1] += xa * k1;
      acc[r][2] += xa * k2;
      acc[r][3] += xa * k3;
    }
  }
  for (std::size_t r = 0; r < 4; ++r) std::memcpy(out + r * cols, acc[r], sizeof(acc[r]));
}

}  // namespace

void project_rows(const Matrix& x, const Matrix& k, Matrix& out) {
  const std::size_t rows = static_cast<std::size_t>(x.rows());
  const std::size_t d = static_cast<std::size_t>(x.cols());
  const std::size_t cols = static_cast<std::size_t>(k.cols());
  require(static_cast<std::size_t>(k.rows()) == d, "projection width mismatch");
  out.setZero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  constexpr std::size_t kR = 4, kC = 16;
  const double* xd = x.data();
  const double* kd = k.data();
  double* od = out.data();
  const std::size_t full_c = cols - cols % kC;
  std::size_t r0 = 0;
  for (; r0 + kR <= rows; r0 += kR) {
    for (std::size_t c0 = 0; c0 < full_c; c0 += kC) {
      project_tile(xd + r0 * d, d, kd + c0, cols, od + r0 * cols + c0);
    }
  }
  // Leftover rows and columns, same accumulation order.
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c_begin = r < r0 ? full_c : 0;
    double* orow = od + r * cols;
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = xd[r * d + a];
      const double* krow = kd + a * cols;
      for (std::size_t c = c_begin; c < cols; ++c) orow[c] += xa * krow[c];
    }
  }
}

NGramReps cnn2gram(const SequenceEmbedding& seq, const Cnn2GramParams& params) {
  params.validate();
  require(seq.width() == params.d, "sequence width " + std::to_string(seq.width()) +
                                       " does not match kernel input width " +
                                       std::to_string(params.d));
  const std::size_t rows = seq.rows();
  const std::size_t d = params.d;
  const std::size_t d_g = params.d_g;
  NGramReps reps;

  // Group bitwise-identical content rows so each is projected once.
  reps.row_group.assign(rows, -1);
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  std::vector<std::size_t> group_source;
  for (std::size_t r = 0; r < rows; ++r) {
    if (seq.special[r]) continue;
    const double* row = seq.values.data() + r * d;
    auto& bucket = buckets[row_hash(row, d)];
    std::ptrdiff_t group = -1;
    for (std::size_t g : bucket) {
      if (std::memcmp(seq.values.data() + group_source[g] * d, row, d * sizeof(double)) == 0) {
        group = static_cast<std::ptrdiff_t>(g);
        break;
      }
    }
    if (group < 0) {
      group = static_cast<std::ptrdiff_t>(group_source.size());
      bucket.push_back(group_source.size());
      group_source.push_back(r);
    }
    reps.row_group[r] = group;
  }
  reps.unique_rows.resize(static_cast<Eigen::Index>(group_source.size()),
                          static_cast<Eigen::Index>(d));
  for (std::size_t g = 0; g < group_source.size(); ++g) {
    reps.unique_rows.row(static_cast<Eigen::Index>(g)) =
        seq.values.row(static_cast<Eigen::Index>(group_source[g]));
  }
  project_rows(reps.unique_rows, stack_kernels(params), reps.projected);
  const std::size_t pcols = static_cast<std::size_t>(reps.projected.cols());

  // clear[r] = number of consecutive non-special rows starting at r.
  std::vector<std::size_t> clear(rows + 1, 0);
  for (std::size_t r = rows; r-- > 0;) clear[r] = seq.special[r] ? 0 : clear[r + 1] + 1;

  reps.layers.resize(params.k_max);
  for (std::size_t n = 1; n <= params.k_max; ++n) {
    NGramLayer& layer = reps.layers[n - 1];
    layer.n = n;
    for (std::size_t s = 0; s + n <= rows; ++s) {
      if (clear[s] >= n) layer.starts.push_back(s);
    }
    const auto windows = static_cast<Eigen::Index>(layer.starts.size());
    layer.pre.resize(windows, static_cast<Eigen::Index>(d_g));
    const double* bias = params.biases[n - 1].data();
    for (Eigen::Index i = 0; i < windows; ++i) {
      const std::size_t s = layer.starts[static_cast<std::size_t>(i)];
      double* out = layer.pre.data() + static_cast<std::size_t>(i) * d_g;
      const double* first = reps.projected.data() +
                            static_cast<std::size_t>(reps.row_group[s]) * pcols +
                            projection_offset(n, 0, d_g);
      std::copy(first, first + d_g, out);
      for (std::size_t j = 1; j < n; ++j) {
        const double* part = reps.projected.data() +
                             static_cast<std::size_t>(reps.row_group[s + j]) * pcols +
                             projection_offset(n, j, d_g);
        for (std::size_t o = 0; o < d_g; ++o) out[o] += part[o];
      }
      for (std::size_t o = 0; o < d_g; ++o) out[o] += bias[o];
    }
    layer.act = layer.pre.cwiseMax(0.0);
  }
  return reps;
}

std::size_t NGramScoreTable::window_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.starts.size();
  return n;
}

NGramScoreTable head_scores(const SequenceEmbedding& seq, const NGramReps& reps,
                            const HeadParams& heads) {
  require(seq.ids.size() == seq.rows() && seq.doc_position.size() == seq.rows(),
          "sequence embedding carries no token ids");
  NGramScoreTable table;
  table.layers.resize(reps.layers.size());
  for (std::size_t li = 0; li < reps.layers.size(); ++li) {
    const NGramLayer& layer = reps.layers[li];
    const auto d_g = static_cast<std::size_t>(layer.act.cols());
    const auto windows = layer.starts.size();
    if (windows > 0) {
      require(static_cast<std::size_t>(heads.rank_w.size()) == d_g &&
                  static_cast<std::size_t>(heads.chunk_w.size()) == d_g,
              "head width does not match representation width");
    }
    NGramScores& out = table.layers[li];
    out.n = layer.n;
    out.starts = layer.starts;
    out.token_starts.resize(windows);
    out.keys.resize(windows);
    out.rank.resize(static_cast<Eigen::Index>(windows));
    out.chunk.resize(static_cast<Eigen::Index>(windows));
    for (std::size_t i = 0; i < windows; ++i) {
      const std::size_t s = layer.starts[i];
      out.token_starts[i] = seq.doc_position[s];
      out.keys[i].assign(seq.ids.begin() + static_cast<std::ptrdiff_t>(s),
                         seq.ids.begin() + static_cast<std::ptrdiff_t>(s + layer.n));
      const double* a = layer.act.data() + i * d_g;
      out.rank[static_cast<Eigen::Index>(i)] = ordered_dot(a, heads.rank_w.data(), d_g) + heads.rank_b;
      out.chunk[static_cast<Eigen::Index>(i)] =
          ordered_dot(a, heads.chunk_w.data(), d_g) + heads.chunk_b;
    }
  }
  return table;
}

GlobalScores global_pool(const NGramScoreTable& table) {
  if (table.empty()) Throw(ErrorKind::kArgument, "cannot pool an empty score table");
  GlobalScores g;
  for (std::size_t li = 0; li < table.layers.size(); ++li) {
    const auto& layer = table.layers[li];
    for (std::size_t i = 0; i < layer.keys.size(); ++i) {
      const double s = layer.rank[static_cast<Eigen::Index>(i)];
      auto [it, inserted] = g.index.try_emplace(layer.keys[i], g.candidates.size());
      if (inserted) {
        g.candidates.push_back({layer.keys[i], s, {li, i}, 1});
        continue;
      }
      GlobalCandidate& c = g.candidates[it->second];
      ++c.count;
      if (s > c.score) {
        c.score = s;
        c.best = {li, i};
      }
    }
  }
  return g;
}

RankLoss margin_rank_loss(const GlobalScores& globals, const PhraseKeySet& gold_keys,
                          std::size_t neg_sample_cap, std::uint64_t seed) {
  RankLoss out;
  out.d_score.assign(globals.candidates.size(), 0.0);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < globals.candidates.size(); ++i) {
    if (gold_keys.count(globals.candidates[i].key)) {
      out.positives.push_back(i);
    } else {
      pool.push_back(i);
    }
  }
  if (out.positives.empty() || pool.empty() || neg_sample_cap == 0) {
    out.skipped = true;
    return out;
  }
  if (pool.size() > neg_sample_cap) {
    Rng rng(derive_seed(seed, 303));
    for (std::size_t i = 0; i < neg_sample_cap; ++i) {
      std::size_t j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(neg_sample_cap);
    std::sort(pool.begin(), pool.end());
  }
  out.negatives = std::move(pool);
  out.pair_count = out.positives.size() * out.negatives.size();
  const double scale = 1.0 / static_cast<double>(out.pair_count);
  double total = 0.0;
  for (std::size_t p : out.positives) {
    const double sp = globals.candidates[p].score;
    for (std::size_t m : out.negatives) {
      const double margin = 1.0 - sp + globals.candidates[m].score;
      if (margin > 0.0) {
        total += margin;
        out.d_score[p] -= scale;
        out.d_score[m] += scale;
      }
    }
  }
  out.loss = total * scale;
  return out;
}

ChunkLoss chunk_bce_loss(const NGramScoreTable& table, std::span<const TokenSpan> gold_spans) {
  ChunkLoss out;
  std::set<std::pair<std::size_t, std::size_t>> labels;
  for (const auto& s : gold_spans) labels.emplace(s.start, s.length);
  out.windows = table.window_count();
  out.d_logits.resize(table.layers.size());
  if (out.windows == 0) return out;
  const double scale = 1.0 / static_cast<double>(out.windows);
  double total = 0.0;
  for (std::size_t li = 0; li < table.layers.size(); ++li) {
    const auto& layer = table.layers[li];
    Vector& grad = out.d_logits[li];
    grad.setZero(layer.chunk.size());
    for (Eigen::Index i = 0; i < layer.chunk.size(); ++i) {
      const auto start = layer.token_starts[static_cast<std::size_t>(i)];
      const bool positive =
          start >= 0 && labels.count({static_cast<std::size_t>(start), layer.n}) > 0;
      out.positive_labels += positive ? 1 : 0;
      const double z = layer.chunk[i];
      const double zc = std::clamp(z, -kLogitClamp, kLogitClamp);
      total += positive ? softplus(-zc) : softplus(zc);
      if (std::abs(z) <= kLogitClamp) {
        grad[i] = (sigmoid(zc) - (positive ? 1.0 : 0.0)) * scale;
      }
    }
  }
  out.loss = total * scale;
  return out;
}

LossBreakdown combined_loss(std::optional<double> loss_rank, double loss_chunk,
                            std::size_t pair_count, std::size_t label_count) {
  if (!std::isfinite(loss_chunk) || (loss_rank && !std::isfinite(*loss_rank))) {
    Throw(ErrorKind::kNumeric, "non-finite loss component");
  }
  LossBreakdown out;
  out.loss_chunk = loss_chunk;
  out.label_count = label_count;
  if (loss_rank) {
    out.loss_rank = *loss_rank;
    out.pair_count = pair_count;
  } else {
    out.rank_skipped = true;
  }
  out.loss_kpe = out.loss_rank + out.loss_chunk;
  return out;
}

ForwardState forward_sample(const ModelParams& params, const TokenizedDocument& tdoc,
                            const SampleSequence& sample, std::size_t sample_index,
                            const PrecomputedStore* store) {
  std::vector<Matrix> subseqs;
  subseqs.reserve(sample.blocks.size());
  for (std::size_t b = 0; b < sample.blocks.size(); ++b) {
    if (params.encoder_kind == EncoderKind::kToy) {
      subseqs.push_back(encode_block(sample.blocks[b], params.encoder));
    } else {
      if (store == nullptr) {
        Throw(ErrorKind::kConfig, "model uses precomputed embeddings but no store was given");
      }
      subseqs.push_back(store->load_block(tdoc.doc_id, sample.first_block_index + b,
                                          sample.blocks[b].size()));
    }
  }
  ForwardState state;
  state.seq = concat_blocks(sample.blocks, subseqs, sample_index);
  state.reps = cnn2gram(state.seq, params.cnn);
  state.table = head_scores(state.seq, state.reps, params.heads);
  return state;
}

ScoreGrads ScoreGrads::zeros_like(const NGramScoreTable& table) {
  ScoreGrads g;
  for (const auto& l : table.layers) {
    g.d_rank.push_back(Vector::Zero(l.rank.size()));
    g.d_chunk.push_back(Vector::Zero(l.chunk.size()));
  }
  return g;
}

void add_global_gradient(const GlobalScores& globals, std::span<const double> d_score,
                         ScoreGrads& grads) {
  for (std::size_t i = 0; i < globals.candidates.size(); ++i) {
    if (d_score[i] == 0.0) continue;
    const Occurrence& o = globals.candidates[i].best;
    grads.d_rank[o.layer][static_cast<Eigen::Index>(o.window)] += d_score[i];
  }
}

ModelParams backward(const ModelParams& params, const ForwardState& state,
                     const SampleSequence& sample, const ScoreGrads& grads) {
  const auto& cnn = params.cnn;
  const auto& reps = state.reps;
  require(grads.d_rank.size() == reps.layers.size() && grads.d_chunk.size() == reps.layers.size(),
          "gradient layer count does not match the forward state");
  ModelParams out = params.zeros_like();
  const std::size_t rows = state.seq.rows();
  const std::size_t d_g = cnn.d_g;
  const auto pcols = static_cast<Eigen::Index>(reps.projected.cols());
  Matrix d_proj = Matrix::Zero(static_cast<Eigen::Index>(rows), pcols);

  for (std::size_t li = 0; li < reps.layers.size(); ++li) {
    const NGramLayer& layer = reps.layers[li];
    const Vector& dr = grads.d_rank[li];
    const Vector& dc = grads.d_chunk[li];
    require(dr.size() == layer.act.rows() && dc.size() == layer.act.rows(),
            "gradient shape does not match layer " + std::to_string(layer.n));
    if (layer.starts.empty()) continue;
    out.heads.rank_w.noalias() += layer.act.transpose() * dr;
    out.heads.rank_b += dr.sum();
    out.heads.chunk_w.noalias() += layer.act.transpose() * dc;
    out.heads.chunk_b += dc.sum();

    Matrix d_pre = dr * params.heads.rank_w.transpose();
    d_pre.noalias() += dc * params.heads.chunk_w.transpose();
    d_pre = (layer.pre.array() > 0.0).select(d_pre.array(), 0.0).matrix();
    out.cnn.biases[li] = d_pre.colwise().sum().transpose();
    for (std::size_t i = 0; i < layer.starts.size(); ++i) {
      const std::size_t s = layer.starts[i];
      const double* src = d_pre.data() + i * d_g;
      for (std::size_t j = 0; j < layer.n; ++j) {
        double* dst = d_proj.data() + (s + j) * static_cast<std::size_t>(pcols) +
                      projection_offset(layer.n, j, d_g);
        for (std::size_t o = 0; o < d_g; ++o) dst[o] += src[o];
      }
    }
  }

  // Kernel gradient through the grouped rows.
  Matrix d_group = Matrix::Zero(reps.unique_rows.rows(), pcols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (reps.row_group[r] >= 0) d_group.row(reps.row_group[r]) += d_proj.row(static_cast<Eigen::Index>(r));
  }
  const Matrix d_stack = reps.unique_rows.transpose() * d_group;
  const auto d = static_cast<Eigen::Index>(cnn.d);
  for (std::size_t n = 1; n <= cnn.k_max; ++n) {
    for (std::size_t j = 0; j < n; ++j) {
      out.cnn.kernels[n - 1].middleRows(static_cast<Eigen::Index>(j) * d, d) =
          d_stack.middleCols(static_cast<Eigen::Index>(projection_offset(n, j, d_g)),
                             static_cast<Eigen::Index>(d_g));
    }
  }

  if (params.encoder_kind == EncoderKind::kToy && params.encoder.trainable &&
      params.encoder.mix_window == 1) {
    // Pure lookup: sum the row gradients per token before leaving the
    // projection space, one product per distinct token instead of per row.
    std::unordered_map<TokenId, Eigen::Index> local;
    std::vector<TokenId> tokens;
    std::vector<Eigen::Index> row_token(rows, -1);
    for (std::size_t b = 0; b < sample.blocks.size(); ++b) {
      const auto begin = state.seq.block_rows[b].first;
      const auto& ids = sample.blocks[b].ids;
      for (std::size_t t = 0; t < ids.size(); ++t) {
        if (state.seq.special[begin + t]) continue;
        auto [it, added] = local.try_emplace(ids[t], static_cast<Eigen::Index>(tokens.size()));
        if (added) tokens.push_back(ids[t]);
        row_token[begin + t] = it->second;
      }
    }
    Matrix d_tok = Matrix::Zero(static_cast<Eigen::Index>(tokens.size()), pcols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (row_token[r] >= 0) d_tok.row(row_token[r]) += d_proj.row(static_cast<Eigen::Index>(r));
    }
    const Matrix d_emb = d_tok * stack_kernels(cnn).transpose();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      out.encoder.embedding_table.row(tokens[i]) += d_emb.row(static_cast<Eigen::Index>(i));
    }
  } else if (params.encoder_kind == EncoderKind::kToy && params.encoder.trainable) {
    const Matrix d_seq = d_proj * stack_kernels(cnn).transpose();
    for (std::size_t b = 0; b < sample.blocks.size(); ++b) {
      const auto [begin, end] = state.seq.block_rows[b];
      encode_block_backward(sample.blocks[b], params.encoder,
                            d_seq.middleRows(static_cast<Eigen::Index>(begin),
                                             static_cast<Eigen::Index>(end - begin)),
                            out.encoder.embedding_table);
    }
  }
  return out;
}

PhraseKeySet gold_keys(const TokenizedDocument& tdoc) {
  PhraseKeySet keys;
  for (const auto& s : tdoc.gold_label_spans) {
    keys.emplace(tdoc.token_ids.begin() + static_cast<std::ptrdiff_t>(s.start),
                 tdoc.token_ids.begin() + static_cast<std::ptrdiff_t>(s.end()));
  }
  return keys;
}

SampleLoss sample_loss(const ForwardState& state, const PhraseKeySet& gold,
                       std::span<const TokenSpan> gold_spans, std::size_t neg_sample_cap,
                       std::uint64_t seed) {
  SampleLoss out;
  out.grads = ScoreGrads::zeros_like(state.table);
  const GlobalScores globals = global_pool(state.table);
  const RankLoss rank = margin_rank_loss(globals, gold, neg_sample_cap, seed);
  const ChunkLoss chunk = chunk_bce_loss(state.table, gold_spans);
  out.breakdown = combined_loss(rank.skipped ? std::nullopt : std::optional<double>(rank.loss),
                                chunk.loss, rank.pair_count, chunk.positive_labels);
  if (!rank.skipped) add_global_gradient(globals, rank.d_score, out.grads);
  for (std::size_t li = 0; li < out.grads.d_chunk.size(); ++li) {
    out.grads.d_chunk[li] = chunk.d_logits[li];
  }
  return out;
}

}  // namespace jointkpe

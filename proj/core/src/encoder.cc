#include "jointkpe/encoder.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "jointkpe/error.h"
#include "jointkpe/rng.h"

namespace jointkpe {
namespace {

std::filesystem::path block_path(const std::filesystem::path& dir, const std::string& doc_id,
                                 std::size_t block) {
  return dir / (doc_id + "." + std::to_string(block) + ".f32");
}

std::string block_name(const std::string& doc_id, std::size_t block) {
  return "(" + doc_id + ", " + std::to_string(block) + ")";
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

void EncoderParams::validate() const {
  if (embedding_table.cols() < 1) Throw(ErrorKind::kArgument, "encoder width d must be >= 1");
  if (mix_window < 1 || mix_window % 2 == 0) {
    Throw(ErrorKind::kArgument, "mix_window must be odd and >= 1, got " +
                                    std::to_string(mix_window));
  }
  if (!embedding_table.allFinite()) Throw(ErrorKind::kNumeric, "embedding table is not finite");
}

EncoderParams init_encoder(std::size_t vocab_size, std::size_t d, int mix_window,
                           std::uint64_t seed) {
  EncoderParams p;
  p.mix_window = mix_window;
  p.embedding_table.resize(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(d));
  Rng rng(derive_seed(seed, 101));
  const double a = 0.5 / static_cast<double>(d);
  for (Eigen::Index i = 0; i < p.embedding_table.size(); ++i) {
    p.embedding_table.data()[i] = uniform_real(rng, -a, a);
  }
  p.validate();
  return p;
}

Matrix encode_block(const TokenBlock& block, const EncoderParams& params) {
  const auto n = static_cast<std::ptrdiff_t>(block.size());
  const auto vocab = static_cast<TokenId>(params.vocab_size());
  for (TokenId id : block.ids) {
    if (id < 0 || id >= vocab) {
      Throw(ErrorKind::kArgument, "token id " + std::to_string(id) +
                                      " out of range for embedding table of " +
                                      std::to_string(vocab) + " rows");
    }
  }
  const std::ptrdiff_t half = params.mix_window / 2;
  Matrix out(n, params.embedding_table.cols());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, t + half);
    out.row(t) = params.embedding_table.row(block.ids[static_cast<std::size_t>(lo)]);
    for (std::ptrdiff_t u = lo + 1; u <= hi; ++u) {
      out.row(t) += params.embedding_table.row(block.ids[static_cast<std::size_t>(u)]);
    }
    if (hi > lo) out.row(t) /= static_cast<double>(hi - lo + 1);
  }
  return out;
}

void encode_block_backward(const TokenBlock& block, const EncoderParams& params,
                           const Eigen::Ref<const Matrix>& d_rows, Matrix& d_table) {
  const auto n = static_cast<std::ptrdiff_t>(block.size());
  const std::ptrdiff_t half = params.mix_window / 2;
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, t + half);
    const double scale = 1.0 / static_cast<double>(hi - lo + 1);
    for (std::ptrdiff_t u = lo; u <= hi; ++u) {
      d_table.row(block.ids[static_cast<std::size_t>(u)]) += scale * d_rows.row(t);
    }
  }
}

SequenceEmbedding concat_blocks(std::span<const Matrix> subseqs, std::size_t sample) {
  SequenceEmbedding seq;
  if (subseqs.empty()) return seq;
  const auto d = subseqs.front().cols();
  Eigen::Index total = 0;
  for (const auto& m : subseqs) {
    if (m.cols() != d) {
      Throw(ErrorKind::kArgument, "block width mismatch: " + std::to_string(m.cols()) +
                                      " vs " + std::to_string(d));
    }
    total += m.rows();
  }
  seq.values.resize(total, d);
  seq.origins.reserve(static_cast<std::size_t>(total));
  seq.special.assign(static_cast<std::size_t>(total), 0);
  Eigen::Index row = 0;
  for (std::size_t b = 0; b < subseqs.size(); ++b) {
    const auto& m = subseqs[b];
    seq.values.middleRows(row, m.rows()) = m;
    const auto begin = static_cast<std::size_t>(row);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      seq.origins.push_back({sample, b, static_cast<std::size_t>(r)});
    }
    if (m.rows() > 0) {
      seq.special[begin] = 1;
      seq.special[begin + static_cast<std::size_t>(m.rows()) - 1] = 1;
    }
    row += m.rows();
    seq.block_rows.emplace_back(begin, static_cast<std::size_t>(row));
  }
  return seq;
}

SequenceEmbedding concat_blocks(std::span<const TokenBlock> blocks,
                                std::span<const Matrix> subseqs, std::size_t sample) {
  if (blocks.size() != subseqs.size()) {
    Throw(ErrorKind::kArgument, "block count does not match encoding count");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (static_cast<std::size_t>(subseqs[b].rows()) != blocks[b].size()) {
      Throw(ErrorKind::kArgument, "encoding of block " + std::to_string(b) + " has " +
                                      std::to_string(subseqs[b].rows()) + " rows, block has " +
                                      std::to_string(blocks[b].size()) + " tokens");
    }
  }
  SequenceEmbedding seq = concat_blocks(subseqs, sample);
  seq.ids.reserve(seq.rows());
  seq.doc_position.reserve(seq.rows());
  for (const auto& block : blocks) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      seq.ids.push_back(block.ids[i]);
      const bool special = i == 0 || i + 1 == block.size();
      seq.doc_position.push_back(
          special ? -1 : static_cast<std::ptrdiff_t>(block.content_begin + i - 1));
    }
  }
  return seq;
}

PrecomputedStore::PrecomputedStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  const auto manifest = dir_ / "manifest.tsv";
  std::ifstream in(manifest);
  if (!in) Throw(ErrorKind::kLoad, "cannot open " + manifest.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string doc_id;
    std::size_t block = 0, rows = 0, d = 0;
    if (!std::getline(ss, doc_id, '\t') || !(ss >> block >> rows >> d) || d == 0) {
      Throw(ErrorKind::kParse, manifest.string() + ":" + std::to_string(line_no) +
                                   ": expected doc_id<TAB>block<TAB>rows<TAB>d");
    }
    if (d_ != 0 && d != d_) {
      Throw(ErrorKind::kLoad, manifest.string() + ":" + std::to_string(line_no) +
                                  ": width " + std::to_string(d) + " differs from " +
                                  std::to_string(d_));
    }
    d_ = d;
    rows_[{doc_id, block}] = rows;
  }
}

Matrix PrecomputedStore::load_block(const std::string& doc_id, std::size_t block,
                                    std::size_t expected_rows) const {
  auto it = rows_.find({doc_id, block});
  if (it == rows_.end()) {
    Throw(ErrorKind::kLoad, "precomputed embeddings missing block " + block_name(doc_id, block));
  }
  if (it->second != expected_rows) {
    Throw(ErrorKind::kLoad, "precomputed block " + block_name(doc_id, block) + " has " +
                                std::to_string(it->second) + " rows, expected " +
                                std::to_string(expected_rows));
  }
  const auto path = block_path(dir_, doc_id, block);
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kLoad, "cannot open " + path.string());
  const std::size_t count = expected_rows * d_;
  std::vector<std::uint32_t> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<std::size_t>(in.gcount()) != count * 4 || in.peek() != EOF) {
    Throw(ErrorKind::kLoad, path.string() + ": size does not match " +
                                std::to_string(expected_rows) + " x " + std::to_string(d_));
  }
  Matrix out(static_cast<Eigen::Index>(expected_rows), static_cast<Eigen::Index>(d_));
  for (std::size_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(to_little(raw[i]));
    if (!std::isfinite(f)) {
      Throw(ErrorKind::kLoad, "non-finite value in precomputed block " +
                                  block_name(doc_id, block) + " at row " +
                                  std::to_string(i / d_) + ", column " + std::to_string(i % d_));
    }
    out.data()[i] = static_cast<double>(f);
  }
  return out;
}

void write_precomputed_block(const std::filesystem::path& dir, const std::string& doc_id,
                             std::size_t block, const Matrix& values) {
  std::filesystem::create_directories(dir);
  const auto path = block_path(dir, doc_id, block);
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorKind::kLoad, "cannot write " + path.string());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values.data()[i])));
    out.write(reinterpret_cast<const char*>(&bits), 4);
  }
}

void write_precomputed_manifest(
    const std::filesystem::path& dir,
    const std::vector<std::tuple<std::string, std::size_t, std::size_t, std::size_t>>& entries) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "manifest.tsv", std::ios::binary);
  if (!out) Throw(ErrorKind::kLoad, "cannot write manifest in " + dir.string());
  for (const auto& [doc_id, block, rows, d] : entries) {
    out << doc_id << '\t' << block << '\t' << rows << '\t' << d << '\n';
  }
}

std::vector<Matrix> load_precomputed(const std::filesystem::path& dir,
                                     const TokenizedDocument& tdoc, std::size_t max_tokens,
                                     std::size_t m) {
  PrecomputedStore store(dir);
  std::vector<Matrix> out;
  for (const auto& sample : split_samples(tdoc, max_tokens, m)) {
    for (std::size_t b = 0; b < sample.blocks.size(); ++b) {
      out.push_back(store.load_block(tdoc.doc_id, sample.first_block_index + b,
                                     sample.blocks[b].size()));
    }
  }
  return out;
}

}  // namespace jointkpe

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "jointkpe/encoder.h"
#include "jointkpe/error.h"
#include "jointkpe/rng.h"
#include "test_util.h"

namespace jointkpe {
namespace {

EncoderParams random_encoder(std::size_t vocab, std::size_t d, int w, std::uint64_t seed) {
  EncoderParams p;
  p.embedding_table.resize(static_cast<Eigen::Index>(vocab), static_cast<Eigen::Index>(d));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < p.embedding_table.size(); ++i) {
    p.embedding_table.data()[i] = uniform_real(rng, -1.0, 1.0);
  }
  p.mix_window = w;
  return p;
}

TokenBlock block_of(std::vector<TokenId> content) {
  TokenBlock b;
  b.ids.push_back(Vocabulary::kCls);
  b.ids.insert(b.ids.end(), content.begin(), content.end());
  b.ids.push_back(Vocabulary::kSep);
  b.content_end = content.size();
  return b;
}

TEST(EncodeBlock, LookupAtWindowOne) {
  const auto p = random_encoder(10, 4, 1, 1);
  const auto b = block_of({7});
  const Matrix out = encode_block(b, p);
  ASSERT_EQ(out.rows(), 3);
  EXPECT_EQ(out.row(0), p.embedding_table.row(Vocabulary::kCls));
  EXPECT_EQ(out.row(1), p.embedding_table.row(7));
  EXPECT_EQ(out.row(2), p.embedding_table.row(Vocabulary::kSep));
}

TEST(EncodeBlock, WindowThreeMeansAndClips) {
  const auto p = random_encoder(10, 3, 3, 2);
  const auto b = block_of({4, 5, 6});
  const Matrix out = encode_block(b, p);
  const auto& t = p.embedding_table;
  EXPECT_TRUE(out.row(2).isApprox((t.row(4) + t.row(5) + t.row(6)) / 3.0, 1e-15));
  EXPECT_TRUE(out.row(0).isApprox((t.row(Vocabulary::kCls) + t.row(4)) / 2.0, 1e-15));
  EXPECT_TRUE(out.row(4).isApprox((t.row(6) + t.row(Vocabulary::kSep)) / 2.0, 1e-15));
}

TEST(EncodeBlock, OutOfRangeIdAndBadWindow) {
  auto p = random_encoder(5, 2, 1, 3);
  EXPECT_THROW(encode_block(block_of({9}), p), Error);
  p.mix_window = 2;
  EXPECT_THROW(p.validate(), Error);
  p.mix_window = 1;
  p.embedding_table(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(p.validate(), Error);
}

TEST(EncodeBlock, LinearInTable) {
  auto p = random_encoder(12, 5, 3, 4);
  const auto b = block_of({4, 9, 11, 5, 6});
  const Matrix base = encode_block(b, p);
  p.embedding_table *= 2.5;
  EXPECT_TRUE(encode_block(b, p).isApprox(base * 2.5, 1e-14));
}

TEST(EncodeBlock, BackwardMatchesFiniteDifference) {
  auto p = random_encoder(8, 3, 3, 5);
  const auto b = block_of({4, 5, 6, 7, 4});
  Rng rng(6);
  Matrix upstream(static_cast<Eigen::Index>(b.size()), 3);
  for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = uniform_real(rng, -1, 1);
  Matrix grad = Matrix::Zero(8, 3);
  encode_block_backward(b, p, upstream, grad);
  const double eps = 1e-6;
  for (Eigen::Index i = 0; i < p.embedding_table.size(); ++i) {
    const double keep = p.embedding_table.data()[i];
    p.embedding_table.data()[i] = keep + eps;
    const double up = encode_block(b, p).cwiseProduct(upstream).sum();
    p.embedding_table.data()[i] = keep - eps;
    const double down = encode_block(b, p).cwiseProduct(upstream).sum();
    p.embedding_table.data()[i] = keep;
    EXPECT_NEAR(grad.data()[i], (up - down) / (2 * eps), 1e-8);
  }
}

TEST(ConcatBlocks, SpecialRowsAndOrigins) {
  const Matrix a = Matrix::Ones(512, 4);
  const Matrix b = Matrix::Zero(182, 4);
  const std::vector<Matrix> parts = {a, b};
  const auto seq = concat_blocks(parts);
  EXPECT_EQ(seq.rows(), 694u);
  std::vector<std::size_t> special;
  for (std::size_t i = 0; i < seq.rows(); ++i) {
    if (seq.special[i]) special.push_back(i);
  }
  EXPECT_EQ(special, (std::vector<std::size_t>{0, 511, 512, 693}));
  EXPECT_EQ(seq.origins[513].block, 1u);
  EXPECT_EQ(seq.origins[513].within_block, 1u);
}

TEST(ConcatBlocks, SingleBlockIdentityAndWidthMismatch) {
  const Matrix a = Matrix::Random(6, 3);
  const std::vector<Matrix> one = {a};
  EXPECT_EQ(concat_blocks(one).values, a);
  const std::vector<Matrix> bad = {a, Matrix::Zero(4, 2)};
  EXPECT_THROW(concat_blocks(bad), Error);
}

TEST(ContextFree, WindowOneRowsIndependentOfSplit) {
  TokenizedDocument t;
  t.doc_id = "t";
  for (int i = 0; i < 300; ++i) {
    t.token_ids.push_back(4 + i % 20);
    t.offsets.push_back({static_cast<std::size_t>(2 * i), static_cast<std::size_t>(2 * i + 1)});
  }
  const auto p = random_encoder(24, 4, 1, 8);
  auto rows_by_position = [&](std::size_t n, std::size_t m) {
    std::vector<Eigen::RowVectorXd> rows(t.token_ids.size());
    for (const auto& s : split_samples(t, n, m)) {
      for (const auto& b : s.blocks) {
        const Matrix e = encode_block(b, p);
        for (std::size_t i = 0; i < b.content_size(); ++i) {
          rows[b.content_begin + i] = e.row(static_cast<Eigen::Index>(i + 1));
        }
      }
    }
    return rows;
  };
  EXPECT_EQ(rows_by_position(8192, 512), rows_by_position(40, 20));
}

TEST(Precomputed, RoundTripMissingBlockAndNaN) {
  testing::TempDir dir("pre");
  TokenizedDocument t;
  t.doc_id = "doc";
  for (int i = 0; i < 25; ++i) t.token_ids.push_back(4);
  t.offsets.resize(25);
  const auto samples = split_samples(t, 20, 10);
  std::vector<std::tuple<std::string, std::size_t, std::size_t, std::size_t>> entries;
  std::vector<Matrix> written;
  std::size_t block = 0;
  Rng rng(1);
  for (const auto& s : samples) {
    for (const auto& b : s.blocks) {
      Matrix m(static_cast<Eigen::Index>(b.size()), 3);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<double>(static_cast<float>(uniform_real(rng, -1, 1)));
      }
      write_precomputed_block(dir.path(), "doc", block, m);
      entries.emplace_back("doc", block, b.size(), 3);
      written.push_back(m);
      ++block;
    }
  }
  write_precomputed_manifest(dir.path(), entries);
  const auto loaded = load_precomputed(dir.path(), t, 20, 10);
  ASSERT_EQ(loaded.size(), written.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) EXPECT_EQ(loaded[i], written[i]);

  // NaN inside a block.
  Matrix bad = written[1];
  bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
  write_precomputed_block(dir.path(), "doc", 1, bad);
  try {
    load_precomputed(dir.path(), t, 20, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLoad);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }

  // Block 2 missing from the manifest.
  write_precomputed_block(dir.path(), "doc", 1, written[1]);
  entries.erase(entries.begin() + 2);
  write_precomputed_manifest(dir.path(), entries);
  try {
    load_precomputed(dir.path(), t, 20, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLoad);
    EXPECT_NE(std::string(e.what()).find("(doc, 2)"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace jointkpe

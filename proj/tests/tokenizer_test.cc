#include <gtest/gtest.h>

#include "jointkpe/corpus.h"
#include "jointkpe/error.h"
#include "jointkpe/evaluator.h"
#include "jointkpe/rng.h"
#include "jointkpe/tokenizer.h"
#include "test_util.h"

namespace jointkpe {
namespace {

TokenizedDocument synthetic_tokens(std::size_t n) {
  TokenizedDocument t;
  t.doc_id = "t";
  for (std::size_t i = 0; i < n; ++i) {
    t.token_ids.push_back(static_cast<TokenId>(4 + i % 50));
    t.offsets.push_back({2 * i, 2 * i + 1});
  }
  return t;
}

TEST(Vocab, SpecialsAreDistinctAndDense) {
  Vocabulary v;
  EXPECT_EQ(v.size(), Vocabulary::kNumSpecials);
  EXPECT_EQ(v.lookup("anything"), Vocabulary::kUnk);
  EXPECT_EQ(v.add("x"), 4);
  EXPECT_EQ(v.add("x"), 4);
  EXPECT_EQ(v.token(4), "x");
  EXPECT_THROW(v.token(99), Error);
}

TEST(BuildVocab, CountsAndOrder) {
  const std::vector<ChatDocument> docs = {make_document("d", "a b a", {})};
  const auto v = build_vocab(docs, 1);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.lookup("a"), 4);
  EXPECT_EQ(v.lookup("b"), 5);
}

TEST(BuildVocab, MinFreqThreshold) {
  const std::vector<ChatDocument> docs = {make_document("d", "a b a", {})};
  const auto v = build_vocab(docs, 2);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_EQ(tokenize(docs[0], v).token_ids[1], Vocabulary::kUnk);
}

TEST(BuildVocab, Preconditions) {
  const std::vector<ChatDocument> docs = {make_document("d", "a", {})};
  EXPECT_THROW(build_vocab(docs, 0), Error);
  EXPECT_THROW(build_vocab({}, 1), Error);
}

TEST(BuildVocab, TiesLexicographic) {
  const std::vector<ChatDocument> docs = {make_document("d", "zeta alpha mid mid", {})};
  const auto v = build_vocab(docs, 1);
  EXPECT_EQ(v.token(4), "mid");
  EXPECT_EQ(v.token(5), "alpha");
  EXPECT_EQ(v.token(6), "zeta");
}

TEST(Vocab, SaveLoadRoundTrip) {
  testing::TempDir dir("vocab");
  const auto v = build_vocab({make_document("d", "hello world, hello", {})}, 1);
  v.save(dir / "v.txt");
  EXPECT_EQ(Vocabulary::load(dir / "v.txt"), v);
}

TEST(Tokenize, OffsetsAndIds) {
  const auto doc = make_document("d", "Hi, there", {});
  const auto v = build_vocab({doc}, 1);
  const auto t = tokenize(doc, v);
  ASSERT_EQ(t.token_ids.size(), 3u);
  EXPECT_EQ(v.token(t.token_ids[0]), "hi");
  EXPECT_EQ(v.token(t.token_ids[1]), ",");
  EXPECT_EQ(v.token(t.token_ids[2]), "there");
  EXPECT_EQ(t.offsets, (std::vector<CharSpan>{{0, 2}, {2, 3}, {4, 9}}));
}

TEST(Tokenize, EmptyText) {
  Vocabulary v;
  EXPECT_TRUE(tokenize(make_document("d", "", {}), v).token_ids.empty());
}

TEST(Tokenize, GoldSpanMapsWhenBoundariesAlign) {
  auto doc = make_document("d", "i'd love to be sucking your nips", {"sucking"});
  annotate(doc, AlignmentRules::defaults());
  const auto v = build_vocab({doc}, 1);
  const auto t = tokenize(doc, v);
  ASSERT_EQ(t.gold_label_spans.size(), 1u);
  EXPECT_EQ(t.gold_label_spans[0].length, 1u);
  EXPECT_EQ(v.token(t.token_ids[t.gold_label_spans[0].start]), "sucking");
}

TEST(Tokenize, MisalignedOrLongSpansDropped) {
  auto doc = make_document("d", "one two three four", {});
  doc.gold_spans = {{0, {1, 7}}, {0, {0, 18}}};
  const auto v = build_vocab({doc}, 1);
  const auto t = tokenize(doc, v, 3);
  EXPECT_TRUE(t.gold_label_spans.empty());
  EXPECT_EQ(t.dropped_gold_spans, 2u);
}

TEST(Tokenize, OffsetSoundnessProperty) {
  const auto docs = synth_corpus({.seed = 3, .n_docs = 4, .min_words = 100, .max_words = 300});
  const auto v = build_vocab({docs[0], docs[1]}, 2);
  for (const auto& d : docs) {
    const auto t = tokenize(d, v);
    ASSERT_EQ(t.offsets.size(), t.token_ids.size());
    for (std::size_t i = 0; i < t.token_ids.size(); ++i) {
      if (i > 0) EXPECT_LE(t.offsets[i - 1].end, t.offsets[i].begin);
      if (t.token_ids[i] == Vocabulary::kUnk) continue;
      EXPECT_EQ(to_lower(d.text.substr(t.offsets[i].begin, t.offsets[i].size())),
                v.token(t.token_ids[i]));
    }
  }
}

TEST(SplitBlocks, Boundaries) {
  auto b = split_blocks(synthetic_tokens(510));
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].size(), 512u);
  EXPECT_EQ(b[0].ids.front(), Vocabulary::kCls);
  EXPECT_EQ(b[0].ids.back(), Vocabulary::kSep);

  b = split_blocks(synthetic_tokens(1200));
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].content_size(), 510u);
  EXPECT_EQ(b[1].content_size(), 510u);
  EXPECT_EQ(b[2].content_size(), 180u);

  EXPECT_THROW(split_blocks(synthetic_tokens(0)), Error);
  EXPECT_THROW(split_blocks(synthetic_tokens(5), 2), Error);
}

TEST(SplitSamples, BalancedArithmetic) {
  auto s = split_samples(synthetic_tokens(8160));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].content_end - s[0].content_begin, 8160u);

  s = split_samples(synthetic_tokens(10000));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].content_end - s[0].content_begin, 5000u);
  EXPECT_EQ(s[1].content_end - s[1].content_begin, 5000u);

  s = split_samples(synthetic_tokens(10001));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].content_end - s[0].content_begin, 5001u);
  EXPECT_EQ(s[1].content_end - s[1].content_begin, 5000u);

  EXPECT_THROW(split_samples(synthetic_tokens(10), 100, 512), Error);
}

TEST(SplitSamples, GoldSpansCrossingEdgeAreDropped) {
  auto t = synthetic_tokens(10000);
  t.gold_label_spans = {{10, 2}, {4999, 2}, {5000, 3}, {9990, 1}};
  const auto s = split_samples(t);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].gold_label_spans, (std::vector<TokenSpan>{{10, 2}}));
  EXPECT_EQ(s[1].gold_label_spans, (std::vector<TokenSpan>{{5000, 3}, {9990, 1}}));
  // The crossing span is lost to both samples it touches.
  EXPECT_EQ(s[0].dropped_gold_spans, 1u);
  EXPECT_EQ(s[1].dropped_gold_spans, 1u);
}

class SplitProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SplitProperty, RoundTripAndSizeLimits) {
  Rng rng(GetParam());
  const auto len = static_cast<std::size_t>(uniform_int(rng, 1, 30000));
  const auto m = static_cast<std::size_t>(uniform_int(rng, 3, 700));
  const auto n = m * static_cast<std::size_t>(uniform_int(rng, 1, 20)) +
                 static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(m) - 1));
  const auto t = synthetic_tokens(len);
  const auto samples = split_samples(t, n, m);
  std::vector<TokenId> rebuilt;
  std::size_t lo = len, hi = 0;
  std::size_t block_counter = 0;
  for (const auto& s : samples) {
    EXPECT_LE(s.total_tokens, n);
    EXPECT_EQ(s.first_block_index, block_counter);
    block_counter += s.blocks.size();
    std::size_t total = 0;
    lo = std::min(lo, s.content_end - s.content_begin);
    hi = std::max(hi, s.content_end - s.content_begin);
    for (const auto& b : s.blocks) {
      EXPECT_LE(b.size(), m);
      EXPECT_EQ(b.ids.front(), Vocabulary::kCls);
      EXPECT_EQ(b.ids.back(), Vocabulary::kSep);
      rebuilt.insert(rebuilt.end(), b.ids.begin() + 1, b.ids.end() - 1);
      total += b.size();
    }
    EXPECT_EQ(total, s.total_tokens);
  }
  EXPECT_EQ(rebuilt, t.token_ids);
  EXPECT_LE(hi - lo, 1u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SplitProperty, ::testing::Range<std::uint64_t>(1, 41));

}  // namespace
}  // namespace jointkpe

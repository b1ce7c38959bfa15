#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "jointkpe/error.h"
#include "jointkpe/extractor.h"
#include "jointkpe/rng.h"
#include "test_util.h"

namespace jointkpe {
namespace {

using testing::brute_force_candidates;
using testing::random_chat;
using testing::random_model;
using testing::same_bits;

PhraseCandidate cand(std::string s, PhraseKey key, double score, std::size_t sample = 0,
                     std::size_t pos = 0, std::size_t n = 1) {
  return {std::move(s), std::move(key), score, sample, pos, n};
}

TEST(GetCandidates, UniverseOfThreeTokens) {
  const auto doc = make_document("d", "a b c", {});
  const auto v = build_vocab({doc}, 1);
  Rng rng(1);
  const auto p = random_model(rng, v.size(), 3, 3, 7, 1);
  const auto all = extract_document(doc, p, v, {.c = kNoLimit});
  std::set<std::string> surfaces;
  for (const auto& c : all) surfaces.insert(c.surface);
  EXPECT_EQ(surfaces, (std::set<std::string>{"a", "b", "c", "a b", "b c", "a b c"}));
}

TEST(GetCandidates, TopCInOrderAndPunctuationFiltered) {
  const auto doc = make_document("d", "one two, three four. five", {});
  const auto v = build_vocab({doc}, 1);
  Rng rng(2);
  const auto p = random_model(rng, v.size(), 4, 4, 3, 1);
  const auto all = extract_document(doc, p, v, {.c = kNoLimit});
  for (const auto& c : all) {
    EXPECT_FALSE(is_punct_token(v.token(c.token_key.front())));
    EXPECT_FALSE(is_punct_token(v.token(c.token_key.back())));
  }
  const auto top3 = extract_document(doc, p, v, {.c = 3});
  ASSERT_EQ(top3.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(top3[i].surface, all[i].surface);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_TRUE(ranks_before(all[i - 1], all[i]));
}

TEST(GetCandidates, KeepCandidateRules) {
  Vocabulary v;
  const auto a = v.add("a");
  const auto comma = v.add(",");
  EXPECT_TRUE(keep_candidate({a}, v));
  EXPECT_TRUE(keep_candidate({a, comma, a}, v));
  EXPECT_FALSE(keep_candidate({comma}, v));
  EXPECT_FALSE(keep_candidate({a, comma}, v));
  EXPECT_FALSE(keep_candidate({comma, a}, v));
  EXPECT_FALSE(keep_candidate({a, Vocabulary::kUnk}, v));
}

TEST(Ranking, TieBreaksByOccurrenceThenSurface) {
  EXPECT_TRUE(ranks_before(cand("b", {5}, 1.0, 0, 2), cand("a", {4}, 1.0, 0, 7)));
  EXPECT_TRUE(ranks_before(cand("z", {5}, 1.0, 0, 0), cand("a", {4}, 1.0, 1, 0)));
  EXPECT_TRUE(ranks_before(cand("a", {4}, 1.0, 0, 3, 2), cand("b", {5}, 1.0, 0, 3, 2)));
  EXPECT_TRUE(ranks_before(cand("x", {4}, 2.0, 3, 9), cand("a", {5}, 1.0, 0, 0)));
}

TEST(MergeSamples, MaxRuleUnionAndTie) {
  const std::vector<std::vector<PhraseCandidate>> lists = {
      {cand("meet at park", {4, 5, 6}, 0.8, 0, 10, 3), cand("x", {9}, 0.1, 0, 1)},
      {cand("meet at park", {4, 5, 6}, 0.6, 1, 900, 3), cand("y", {8}, 0.5, 1, 950)}};
  const auto merged = merge_samples(lists, 10);
  ASSERT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged[0].surface, "meet at park");
  EXPECT_EQ(merged[0].score, 0.8);
  EXPECT_EQ(merged[1].surface, "y");
  EXPECT_EQ(merged[2].surface, "x");

  const std::vector<std::vector<PhraseCandidate>> tie = {{cand("p", {4}, 0.5, 0, 3)},
                                                         {cand("p", {4}, 0.5, 1, 700)}};
  const auto t = merge_samples(tie, 10);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].sample, 0u);
  EXPECT_EQ(t[0].token_pos, 3u);
  EXPECT_EQ(merge_samples(lists, 1).size(), 1u);
}

TEST(MergeSamples, PermutationStable) {
  Rng rng(3);
  std::vector<std::vector<PhraseCandidate>> lists(4);
  for (std::size_t s = 0; s < 4; ++s) {
    for (int i = 0; i < 30; ++i) {
      const auto id = static_cast<TokenId>(4 + uniform_index(rng, 40));
      lists[s].push_back(cand("w" + std::to_string(id), {id}, std::round(uniform_real(rng, 0, 4)), s,
                              s * 100 + static_cast<std::size_t>(i)));
    }
  }
  // Keep each list deduplicated as get_candidates would.
  for (auto& l : lists) {
    std::set<PhraseKey> seen;
    std::erase_if(l, [&](const PhraseCandidate& c) { return !seen.insert(c.token_key).second; });
  }
  const auto a = merge_samples(lists, kNoLimit);
  std::reverse(lists.begin(), lists.end());
  const auto b = merge_samples(lists, kNoLimit);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].token_key, b[i].token_key);
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].sample, b[i].sample);
  }
}

TEST(ExtractConfig, Validation) {
  EXPECT_THROW((ExtractConfig{.c = 0}).validate(), Error);
  EXPECT_THROW((ExtractConfig{.max_tokens = 100, .block_size = 512}).validate(), Error);
  EXPECT_NO_THROW(ExtractConfig{}.validate());
}

TEST(Extract, VocabularyMismatchRejected) {
  const auto doc = make_document("d", "a b", {});
  const auto v = build_vocab({doc}, 1);
  Rng rng(4);
  const auto p = random_model(rng, v.size() + 3, 2, 2, 2, 1);
  EXPECT_THROW(extract_document(doc, p, v, {}), Error);
}

class BruteForce : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(BruteForce, MatchesEnumerationBitwise) {
  Rng rng(GetParam());
  const auto words = static_cast<std::size_t>(uniform_int(rng, 1, 150));
  const auto doc = make_document("d", random_chat(rng, words), {});
  // Vocabulary from a different text so some tokens become [UNK].
  const auto v = build_vocab({make_document("v", random_chat(rng, 80), {})}, 1);
  const auto d = static_cast<std::size_t>(uniform_int(rng, 1, 8));
  const auto dg = static_cast<std::size_t>(uniform_int(rng, 1, 8));
  const auto k = static_cast<std::size_t>(uniform_int(rng, 1, 7));
  const int w = uniform_unit(rng) < 0.5 ? 1 : 3;
  const auto p = random_model(rng, v.size(), d, dg, k, w);
  if (tokenize(doc, v, k).token_ids.size() > 200) GTEST_SKIP();

  const auto got = extract_document(doc, p, v, {.c = kNoLimit});
  const auto want = brute_force_candidates(doc, v, p);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].token_key, want[i].key);
    EXPECT_EQ(got[i].surface, want[i].surface);
    EXPECT_TRUE(same_bits(got[i].score, want[i].score)) << got[i].score << " vs " << want[i].score;
    EXPECT_EQ(got[i].token_pos, want[i].pos);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, BruteForce, ::testing::Range<std::uint64_t>(1, 31));

TEST(Extract, ChunkConsistencyAtWindowOne) {
  Rng rng(7);
  const auto doc = make_document("long", testing::random_chat_tokens(rng, 2000), {});
  const auto v = build_vocab({doc}, 1);
  const auto p = random_model(rng, v.size(), 6, 6, 7, 1);
  ASSERT_EQ(tokenize(doc, v, 7).token_ids.size(), 2000u);
  const auto r = testing::chunk_consistency(doc, v, p, 8192, 1024, 512);
  EXPECT_EQ(r.samples_single, 1u);
  EXPECT_EQ(r.samples_split, 2u);
  EXPECT_GT(r.compared, 1000u);
  EXPECT_EQ(r.mismatched, 0u);
  EXPECT_EQ(r.missing, 0u);
}

TEST(Extract, WindowThreeIsContextual) {
  // Sanity check that the comparison above is not vacuous: with mixing the
  // rows next to a moved edge change, so some scores must differ.
  Rng rng(8);
  const auto doc = make_document("long", testing::random_chat_tokens(rng, 2000), {});
  const auto v = build_vocab({doc}, 1);
  const auto p = random_model(rng, v.size(), 6, 6, 7, 3);
  const auto r = testing::chunk_consistency(doc, v, p, 8192, 1024, 512);
  EXPECT_GT(r.mismatched, 0u);
}

TEST(Output, TsvFormat) {
  const std::vector<PhraseCandidate> ranked = {cand("meet at park", {4}, 0.5),
                                               cand("cash", {5}, -0.25)};
  std::ostringstream out;
  write_candidates(out, ranked);
  EXPECT_EQ(out.str(), "1\t0.5\tmeet at park\n2\t-0.25\tcash\n");
  EXPECT_EQ(surfaces(ranked), (std::vector<std::string>{"meet at park", "cash"}));
}

}  // namespace
}  // namespace jointkpe

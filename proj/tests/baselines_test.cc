#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "jointkpe/baselines.h"
#include "jointkpe/error.h"
#include "jointkpe/rng.h"
#include "test_util.h"

namespace jointkpe {
namespace {

double score_of(const std::vector<ScoredPhrase>& r, const std::string& s) {
  for (const auto& p : r) {
    if (p.surface == s) return p.score;
  }
  return std::nan("");
}

StopwordSet words(std::initializer_list<const char*> w) {
  StopwordSet s;
  for (const char* x : w) s.words.insert(x);
  s.source = "test";
  return s;
}

TEST(Idf, Formula) {
  std::vector<ChatDocument> docs;
  for (int i = 0; i < 10; ++i) docs.push_back(make_document(std::to_string(i), "common x" + std::to_string(i), {}));
  const auto idf = IdfTable::build(docs);
  EXPECT_EQ(idf.n_docs(), 10u);
  EXPECT_EQ(idf.doc_freq("common"), 10u);
  EXPECT_NEAR(idf.idf("common"), std::log(10.0 / 11.0) + 1.0, 1e-15);
  EXPECT_NEAR(idf.idf("common"), 0.9047, 1e-4);
  EXPECT_NEAR(idf.idf("never"), std::log(10.0) + 1.0, 1e-15);
  EXPECT_THROW(IdfTable::build({}).idf("x"), Error);
}

TEST(Tfidf, HandExample) {
  const std::vector<ChatDocument> docs = {make_document("1", "a b", {}), make_document("2", "a c", {})};
  const auto idf = IdfTable::build(docs);
  const auto r = tfidf_extract(docs[0], idf, 10, 7, StopwordSet{});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].surface, "b");
  EXPECT_DOUBLE_EQ(r[0].score, 1.0);
  EXPECT_EQ(r[1].surface, "a b");
  EXPECT_EQ(r[2].surface, "a");
  EXPECT_NEAR(r[2].score, std::log(2.0 / 3.0) + 1.0, 1e-15);
  EXPECT_NEAR(r[2].score, 0.5945, 1e-4);
  const auto one = tfidf_extract(docs[0], idf, 1, 7, StopwordSet{});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].surface, "b");
}

TEST(Tfidf, StopwordAndPunctuationEdgesExcluded) {
  const std::vector<ChatDocument> docs = {make_document("1", "the park, is nice", {})};
  const auto r = tfidf_extract(docs[0], IdfTable::build(docs), 50);
  for (const auto& p : r) {
    EXPECT_NE(p.surface.rfind("the", 0), 0u) << p.surface;
    EXPECT_NE(p.surface.back(), ',');
  }
  EXPECT_FALSE(std::isnan(score_of(r, "park, is nice")));
  EXPECT_TRUE(tfidf_extract(make_document("e", " ", {}), IdfTable::build(docs), 5).empty());
}

TEST(Tfidf, DuplicatedTextKeepsRanking) {
  Rng rng(2);
  std::vector<ChatDocument> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back(make_document(std::to_string(i), testing::random_chat(rng, 60), {}));
  const auto idf = IdfTable::build(corpus);
  const auto& doc = corpus[0];
  const auto twice = make_document("x", doc.text + "\n" + doc.text, {});
  const auto a = tfidf_extract(doc, idf, 1000);
  // The doubled text also has n-grams straddling the join; only the
  // original candidates are compared.
  std::vector<ScoredPhrase> b;
  for (const auto& p : tfidf_extract(twice, idf, 100000)) {
    if (!std::isnan(score_of(a, p.surface))) b.push_back(p);
  }
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].surface, b[i].surface);
    EXPECT_DOUBLE_EQ(b[i].score, 2 * a[i].score);
  }
}

TEST(Rake, DeepLearning) {
  const auto r = rake_extract(make_document("d", "deep learning", {}), StopwordSet::english(), 5);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].surface, "deep learning");
  EXPECT_DOUBLE_EQ(r[0].score, 4.0);
}

TEST(Rake, OnlyStopwordsAndSingleton) {
  EXPECT_TRUE(rake_extract(make_document("d", "the and of it", {}), StopwordSet::english(), 5).empty());
  const auto r = rake_extract(make_document("d", "the zebra", {}), StopwordSet::english(), 5);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r[0].score, 1.0);
  EXPECT_THROW(rake_extract(make_document("d", "x", {}), StopwordSet{}, 5), Error);
}

TEST(Rake, LineBreaksSplitPhrases) {
  const auto r = rake_extract(make_document("d", "red car\nblue bike", {}), StopwordSet::english(), 5);
  EXPECT_FALSE(std::isnan(score_of(r, "red car")));
  EXPECT_FALSE(std::isnan(score_of(r, "blue bike")));
  EXPECT_TRUE(std::isnan(score_of(r, "car blue")));
}

TEST(Rake, WordScoreAtLeastOne) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto doc = make_document("d", testing::random_chat(rng, 120), {});
    for (const auto& p : rake_extract(doc, StopwordSet::english(), 1000)) {
      EXPECT_GE(p.score, static_cast<double>(count_words(p.surface)) - 1e-12);
    }
  }
}

TEST(TextRank, TwoNodeSymmetry) {
  const auto r = textrank_scores({{1}, {0}});
  EXPECT_NEAR(r.normalized[0], 0.5, 1e-12);
  EXPECT_NEAR(r.normalized[1], 0.5, 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(TextRank, IsolatedNodeKeepsTeleportMass) {
  const auto r = textrank_scores({{1}, {0}, {}});
  EXPECT_NEAR(r.raw[2], 0.15 / 3.0, 1e-15);
  EXPECT_NEAR(r.normalized[2], r.raw[2] / std::accumulate(r.raw.begin(), r.raw.end(), 0.0), 1e-15);
}

TEST(TextRank, ChainCentrality) {
  const auto r = textrank_scores({{1}, {0, 2}, {1}});
  EXPECT_GT(r.normalized[1], r.normalized[0]);
  EXPECT_NEAR(r.normalized[0], r.normalized[2], 1e-12);
}

// Random undirected graph, possibly with isolated nodes.
std::vector<std::vector<std::size_t>> random_graph(Rng& rng, std::size_t n, double density) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (uniform_unit(rng) < density) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  return adj;
}

class TextRankGraphs : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(TextRankGraphs, NormalizedSumsToOneAndConverges) {
  Rng rng(GetParam());
  const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 300));
  const auto adj = random_graph(rng, n, uniform_real(rng, 0.0, 0.2));
  const auto r = textrank_scores(adj);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 100u);
  EXPECT_LE(std::abs(std::accumulate(r.normalized.begin(), r.normalized.end(), 0.0) - 1.0), 1e-9);
}

TEST_P(TextRankGraphs, L1ChangeIsMonotone) {
  Rng rng(GetParam() + 1000);
  const auto adj = random_graph(rng, 40, 0.1);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 30; ++k) {
    TextRankOptions o;
    o.max_iter = k;
    o.tol = 0.0;
    const auto r = textrank_scores(adj, o);
    EXPECT_LE(r.last_delta, prev + 1e-15) << k;
    prev = r.last_delta;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, TextRankGraphs, ::testing::Range<std::uint64_t>(1, 41));

TEST(TextRank, ExtractMergesAdjacentSeeds) {
  // Chain alpha - beta - gamma - delta: the two inner words are the
  // ceil(4/3) = 2 seeds and merge where they are adjacent.
  const auto doc = make_document("d", "alpha beta alpha beta alpha beta gamma delta", {});
  const auto r = textrank_extract(doc, StopwordSet::english(), 10);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].surface, "beta gamma");
  EXPECT_EQ(r[1].surface, "beta");
  EXPECT_TRUE(textrank_extract(make_document("d", "the of and", {}), StopwordSet::english(), 5).empty());
}

TEST(Baselines, DeterministicAndOrderIndependent) {
  Rng rng(9);
  std::vector<ChatDocument> corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back(make_document(std::to_string(i), testing::random_chat(rng, 80), {}));
  const auto idf = IdfTable::build(corpus);
  std::vector<ChatDocument> reversed(corpus.rbegin(), corpus.rend());
  const auto idf_r = IdfTable::build(reversed);
  auto surf = [](const std::vector<ScoredPhrase>& r) {
    std::vector<std::pair<std::string, double>> v;
    for (const auto& p : r) v.emplace_back(p.surface, p.score);
    return v;
  };
  for (const auto& d : corpus) {
    EXPECT_EQ(surf(tfidf_extract(d, idf, 30)), surf(tfidf_extract(d, idf_r, 30)));
    EXPECT_EQ(surf(rake_extract(d, StopwordSet::english(), 30)),
              surf(rake_extract(d, StopwordSet::english(), 30)));
    EXPECT_EQ(surf(textrank_extract(d, StopwordSet::english(), 30)),
              surf(textrank_extract(d, StopwordSet::english(), 30)));
  }
}

TEST(Stopwords, BuiltinsAndFile) {
  EXPECT_TRUE(StopwordSet::english().contains("the"));
  EXPECT_TRUE(StopwordSet::portuguese().contains("que"));
  testing::TempDir dir("stop");
  {
    std::ofstream out(dir / "s.txt");
    out << "# mine\nFoo\n\nbar\n";
  }
  const auto s = StopwordSet::load(dir / "s.txt");
  EXPECT_EQ(s.words.size(), 2u);
  EXPECT_TRUE(s.contains("foo"));
  EXPECT_THROW(StopwordSet::load(dir / "nope.txt"), Error);
}

}  // namespace
}  // namespace jointkpe

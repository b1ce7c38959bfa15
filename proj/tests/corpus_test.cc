#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "jointkpe/corpus.h"
#include "jointkpe/error.h"
#include "jointkpe/evaluator.h"
#include "jointkpe/rng.h"
#include "test_util.h"

namespace jointkpe {
namespace {

using testing::TempDir;

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

std::string rec(const std::string& id, const std::string& text) {
  return R"({"id": ")" + id + R"(", "text": ")" + text + R"(", "keyphrases": ["x"]})";
}

TEST(LoadCorpus, SingleRecord) {
  TempDir dir("corpus");
  write_lines(dir / "c.jsonl", {R"({"id": "d1", "text": "hello there friend", "keyphrases": ["hello"]})"});
  const auto docs = load_corpus(dir / "c.jsonl");
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].id, "d1");
  EXPECT_EQ(docs[0].text, "hello there friend");
  EXPECT_EQ(docs[0].gold_keyphrases, std::vector<std::string>{"hello"});
  EXPECT_EQ(docs[0].word_count, 3u);
  EXPECT_TRUE(docs[0].gold_spans.empty());
}

TEST(LoadCorpus, DuplicateIdNamesBothLines) {
  TempDir dir("corpus");
  write_lines(dir / "c.jsonl", {rec("a", "t"), rec("b", "t"), rec("dup", "t"), rec("c", "t"),
                                rec("d", "t"), rec("e", "t"), rec("dup", "t")});
  try {
    load_corpus(dir / "c.jsonl");
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    const std::string what = e.what();
    EXPECT_NE(what.find("lines 3 and 7"), std::string::npos) << what;
  }
}

TEST(LoadCorpus, EmptyFileIsEmptyCorpus) {
  TempDir dir("corpus");
  write_lines(dir / "c.jsonl", {});
  EXPECT_TRUE(load_corpus(dir / "c.jsonl").empty());
}

TEST(LoadCorpus, MalformedRecordNamesLine) {
  TempDir dir("corpus");
  write_lines(dir / "c.jsonl", {rec("a", "t"), "{not json"});
  try {
    load_corpus(dir / "c.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, RejectsMissingIdAndEmptyText) {
  TempDir dir("corpus");
  write_lines(dir / "a.jsonl", {R"({"text": "hi"})"});
  write_lines(dir / "b.jsonl", {R"({"id": "x", "text": "   "})"});
  EXPECT_THROW(load_corpus(dir / "a.jsonl"), Error);
  EXPECT_THROW(load_corpus(dir / "b.jsonl"), Error);
  EXPECT_THROW(load_corpus(dir / "missing.jsonl"), Error);
}

TEST(LoadCorpus, SaveRoundTrip) {
  TempDir dir("corpus");
  std::vector<ChatDocument> docs = {make_document("a", "line one\nline \"two\"", {"one", "two"}),
                                    make_document("b", "ünïcode ok", {})};
  save_corpus(dir / "c.jsonl", docs);
  const auto back = load_corpus(dir / "c.jsonl");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].id, docs[i].id);
    EXPECT_EQ(back[i].text, docs[i].text);
    EXPECT_EQ(back[i].gold_keyphrases, docs[i].gold_keyphrases);
  }
}

std::string slice(const ChatDocument& d, CharSpan s) { return d.text.substr(s.begin, s.size()); }

TEST(Align, LexiconSubstitution) {
  const auto doc = make_document("d", "hey so what do u wanna do tonight", {});
  const auto spans = align_keyphrase("what do you want to do", doc, AlignmentRules::defaults());
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(slice(doc, spans[0]), "what do u wanna do");
}

TEST(Align, SuffixMatch) {
  const auto doc = make_document("d", "i'd love to be sucking your nips", {});
  const auto rules = AlignmentRules::defaults();
  auto spans = align_keyphrase("sucking", doc, rules);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(slice(doc, spans[0]), "sucking");
  spans = align_keyphrase("suck", doc, rules);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(slice(doc, spans[0]), "sucking");
}

TEST(Align, AbsentPhrase) {
  const auto doc = make_document("d", "nothing to see here", {});
  EXPECT_TRUE(align_keyphrase("zebra", doc, AlignmentRules::defaults()).empty());
}

TEST(Align, ExactMatchTakesPrecedence) {
  // "you" occurs verbatim once and as the lexicon variant "u" once.
  const auto doc = make_document("d", "see you later, see u later", {});
  const auto spans = align_keyphrase("see you later", doc, AlignmentRules::defaults());
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(slice(doc, spans[0]), "see you later");
}

TEST(Align, EditDistanceFallback) {
  const auto doc = make_document("d", "meet me at the libary", {});
  const auto spans = align_keyphrase("library", doc, AlignmentRules::defaults());
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(slice(doc, spans[0]), "libary");
  AlignmentRules strict = AlignmentRules::defaults();
  strict.max_edit_distance = 0;
  EXPECT_TRUE(align_keyphrase("library", doc, strict).empty());
}

TEST(Align, NonOverlappingSortedSpans) {
  const auto doc = make_document("d", "go go go go go", {});
  const auto spans = align_keyphrase("go go", doc, AlignmentRules::defaults());
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_LT(spans[0].end, spans[1].begin + 1);
  EXPECT_LT(spans[0].begin, spans[1].begin);
}

TEST(AlignmentRules, ValidateRejectsBadRules) {
  AlignmentRules r;
  r.max_edit_distance = 3;
  EXPECT_THROW(r.validate(), Error);
  AlignmentRules upper;
  upper.abbreviation_lexicon["You"] = {"u"};
  EXPECT_THROW(upper.validate(), Error);
  EXPECT_NO_THROW(AlignmentRules::defaults().validate());
}

TEST(Annotate, SpansWithinBoundsAndUnalignedKept) {
  auto doc = make_document("d", "Meet at the Park tomorrow", {"meet at", "the park", "zebra"});
  const auto stats = annotate(doc, AlignmentRules::defaults());
  EXPECT_EQ(stats.aligned_phrases, 2u);
  EXPECT_EQ(stats.unaligned, std::vector<std::string>{"zebra"});
  EXPECT_EQ(doc.gold_keyphrases.size(), 3u);
  for (const auto& s : doc.gold_spans) {
    EXPECT_LE(s.span.end, doc.text.size());
    EXPECT_LT(s.span.begin, s.span.end);
  }
  const auto gold = evaluation_gold(doc);
  EXPECT_EQ(gold, (std::vector<std::string>{"meet at", "the park", "zebra"}));
}

TEST(Annotate, EvaluationGoldUsesOriginalText) {
  auto doc = make_document("d", "what do u wanna do", {"what do you want to do"});
  annotate(doc, AlignmentRules::defaults());
  EXPECT_EQ(evaluation_gold(doc), std::vector<std::string>{"what do u wanna do"});
}

TEST(Lexicon, LoadMergesEntries) {
  TempDir dir("lex");
  write_lines(dir / "l.tsv", {"# comment", "", "tomorrow\ttmrw,2moro"});
  const auto rules = load_lexicon(dir / "l.tsv");
  ASSERT_TRUE(rules.abbreviation_lexicon.contains("tomorrow"));
  const auto doc = make_document("d", "see u 2moro", {});
  EXPECT_EQ(align_keyphrase("tomorrow", doc, rules).size(), 1u);
}

std::vector<ChatDocument> docs_with_counts(const std::vector<std::size_t>& counts) {
  std::vector<ChatDocument> docs;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::string text;
    for (std::size_t w = 0; w < counts[i]; ++w) text += "w ";
    docs.push_back(make_document("doc" + std::to_string(i), text, {}));
  }
  return docs;
}

TEST(Folds, EqualCountsOnePerFold) {
  const auto a = make_folds(docs_with_counts({4, 4, 4, 4, 4}), 5, 7);
  std::set<std::size_t> used;
  for (const auto& [id, f] : a.doc_to_fold) used.insert(f);
  EXPECT_EQ(used.size(), 5u);
  EXPECT_DOUBLE_EQ(a.balance_ratio(), 1.0);
}

TEST(Folds, GreedyLptHandExample) {
  const auto a = make_folds(docs_with_counts({10, 9, 8, 2, 1, 1}), 2, 0);
  std::multiset<std::size_t> totals(a.fold_word_totals.begin(), a.fold_word_totals.end());
  EXPECT_EQ(totals, (std::multiset<std::size_t>{14, 17}));
  const std::size_t fa = a.doc_to_fold.at("doc0");
  EXPECT_EQ(a.doc_to_fold.at("doc3"), fa);
  EXPECT_EQ(a.doc_to_fold.at("doc4"), fa);
  EXPECT_EQ(a.doc_to_fold.at("doc5"), fa);
  EXPECT_NE(a.doc_to_fold.at("doc1"), fa);
  EXPECT_EQ(a.doc_to_fold.at("doc2"), a.doc_to_fold.at("doc1"));
}

TEST(Folds, MoreFoldsThanDocsIsArgumentError) {
  try {
    make_folds(docs_with_counts({3, 4}), 3, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kArgument);
  }
}

TEST(Folds, TotalsConsistentAndDeterministic) {
  Rng rng(5);
  std::vector<std::size_t> counts;
  for (int i = 0; i < 40; ++i) counts.push_back(static_cast<std::size_t>(uniform_int(rng, 20, 400)));
  const auto docs = docs_with_counts(counts);
  const auto a = make_folds(docs, 5, 11);
  const auto b = make_folds(docs, 5, 11);
  EXPECT_EQ(a.doc_to_fold, b.doc_to_fold);
  ASSERT_EQ(a.doc_to_fold.size(), docs.size());
  std::vector<std::size_t> totals(5, 0);
  for (const auto& d : docs) {
    const auto f = a.doc_to_fold.at(d.id);
    ASSERT_LT(f, 5u);
    totals[f] += d.word_count;
  }
  EXPECT_EQ(totals, a.fold_word_totals);
}

class FoldBalance : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(FoldBalance, IidCountsWithinOnePointFive) {
  Rng rng(GetParam());
  std::vector<std::size_t> counts;
  const auto n = static_cast<std::size_t>(uniform_int(rng, 20, 60));
  for (std::size_t i = 0; i < n; ++i) counts.push_back(static_cast<std::size_t>(uniform_int(rng, 50, 5000)));
  const auto a = make_folds(docs_with_counts(counts), 5, GetParam());
  EXPECT_LE(a.balance_ratio(), 1.5);
}

INSTANTIATE_TEST_SUITE_P(Seeds, FoldBalance, ::testing::Range<std::uint64_t>(1, 21));

TEST(Folds, SyntheticCorpusBalance) {
  const auto docs = synth_corpus({});
  EXPECT_LE(make_folds(docs, 5, 0).balance_ratio(), 1.1);
}

}  // namespace
}  // namespace jointkpe

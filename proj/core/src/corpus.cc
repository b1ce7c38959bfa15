#include "jointkpe/corpus.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "jointkpe/error.h"
#include "jointkpe/rng.h"

namespace jointkpe {
namespace {

bool is_lowercase(std::string_view s) { return to_lower(s) == s; }

std::vector<std::string> lex_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& l : lex(s)) out.push_back(std::move(l.text));
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

enum class Stage { kExact = 1, kLexicon = 2, kSuffix = 3, kEdit = 4 };

struct LexiconEntry {
  std::vector<std::string> key;
  std::vector<std::vector<std::string>> variants;
};

class PhraseMatcher {
 public:
  PhraseMatcher(const std::vector<Lexeme>& text, std::vector<std::string> phrase,
                const AlignmentRules& rules, std::vector<LexiconEntry> lexicon)
      : text_(text), phrase_(std::move(phrase)), rules_(rules),
        lexicon_(std::move(lexicon)) {}

  std::vector<CharSpan> run(Stage stage) const {
    std::vector<CharSpan> spans;
    std::size_t t = 0;
    while (t < text_.size()) {
      if (auto end = match(t, 0, stage)) {
        spans.push_back({text_[t].span.begin, text_[*end - 1].span.end});
        t = *end;
      } else {
        ++t;
      }
    }
    return spans;
  }

 private:
  bool word_matches(const std::string& text_word, const std::string& phrase_word,
                    Stage stage) const {
    if (text_word == phrase_word) return true;
    if (stage >= Stage::kSuffix && rules_.allow_suffix_match &&
        text_word.size() > phrase_word.size() &&
        text_word.size() - phrase_word.size() <= rules_.max_suffix_length &&
        text_word.compare(0, phrase_word.size(), phrase_word) == 0 &&
        !is_punct_token(phrase_word)) {
      return true;
    }
    if (stage >= Stage::kEdit && rules_.max_edit_distance > 0 &&
        text_word.size() >= rules_.min_edit_word_length &&
        phrase_word.size() >= rules_.min_edit_word_length &&
        levenshtein(text_word, phrase_word) <=
            static_cast<std::size_t>(rules_.max_edit_distance)) {
      return true;
    }
    return false;
  }

  // Returns the text index one past the match of phrase_[p..] at text_[t..].
  std::optional<std::size_t> match(std::size_t t, std::size_t p, Stage stage) const {
    if (p == phrase_.size()) return t;
    if (t >= text_.size()) return std::nullopt;
    if (word_matches(text_[t].text, phrase_[p], stage)) {
      if (auto end = match(t + 1, p + 1, stage)) return end;
    }
    if (stage < Stage::kLexicon) return std::nullopt;
    for (const auto& entry : lexicon_) {
      const auto& key = entry.key;
      if (p + key.size() > phrase_.size() ||
          !std::equal(key.begin(), key.end(), phrase_.begin() + p)) {
        continue;
      }
      for (const auto& variant : entry.variants) {
        if (t + variant.size() > text_.size()) continue;
        bool ok = true;
        for (std::size_t i = 0; i < variant.size() && ok; ++i) {
          ok = text_[t + i].text == variant[i];
        }
        if (!ok) continue;
        if (auto end = match(t + variant.size(), p + key.size(), stage)) return end;
      }
    }
    return std::nullopt;
  }

  const std::vector<Lexeme>& text_;
  std::vector<std::string> phrase_;
  const AlignmentRules& rules_;
  std::vector<LexiconEntry> lexicon_;
};

}  // namespace

ChatDocument make_document(std::string id, std::string text,
                           std::vector<std::string> keyphrases) {
  ChatDocument doc;
  doc.id = std::move(id);
  doc.text = std::move(text);
  doc.gold_keyphrases = std::move(keyphrases);
  doc.word_count = count_words(doc.text);
  return doc;
}

void AlignmentRules::validate() const {
  if (max_edit_distance < 0 || max_edit_distance > 2) {
    Throw(ErrorKind::kValidation, "max_edit_distance must be in [0, 2], got " +
                                      std::to_string(max_edit_distance));
  }
  for (const auto& [key, variants] : abbreviation_lexicon) {
    if (key.empty() || !is_lowercase(key)) {
      Throw(ErrorKind::kValidation, "lexicon key must be lowercase: '" + key + "'");
    }
    for (const auto& v : variants) {
      if (v.empty() || !is_lowercase(v)) {
        Throw(ErrorKind::kValidation,
              "lexicon variant must be lowercase: '" + v + "' for '" + key + "'");
      }
    }
  }
}

AlignmentRules AlignmentRules::defaults() {
  AlignmentRules rules;
  rules.abbreviation_lexicon = {
      {"you", {"u", "ya", "yu"}},
      {"your", {"ur", "yr"}},
      {"you're", {"ur", "youre"}},
      {"are", {"r"}},
      {"okay", {"k", "ok", "kk"}},
      {"want to", {"wanna"}},
      {"going to", {"gonna"}},
      {"got to", {"gotta"}},
      {"pictures", {"pics", "pix"}},
      {"picture", {"pic"}},
      {"nipples", {"tits", "nips"}},
      {"brassiere", {"bra"}},
      {"tonight", {"tonite", "2nite"}},
      {"tomorrow", {"tmrw", "2morrow"}},
      {"to", {"2"}},
      {"for", {"4"}},
      {"see", {"c"}},
      {"why", {"y"}},
      {"be", {"b"}},
      {"love", {"luv"}},
      {"please", {"pls", "plz"}},
      {"because", {"cuz", "bc"}},
      {"really", {"rly"}},
      {"people", {"ppl"}},
      {"thanks", {"thx"}},
      {"what", {"wat", "wut"}},
      {"boyfriend", {"bf"}},
      {"girlfriend", {"gf"}},
      {"i do not know", {"idk"}},
      {"laughing out loud", {"lol"}},
      {"oh my god", {"omg"}},
      {"be right back", {"brb"}},
      {"talk to you later", {"ttyl"}},
  };
  return rules;
}

AlignmentRules load_lexicon(const std::filesystem::path& path, AlignmentRules base) {
  std::ifstream in(path);
  if (!in) Throw(ErrorKind::kLoad, "cannot open lexicon " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (normalize_phrase(line).empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      Throw(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                   ": expected normalized<TAB>variants");
    }
    std::string key = normalize_phrase(line.substr(0, tab));
    auto& variants = base.abbreviation_lexicon[key];
    std::stringstream ss(line.substr(tab + 1));
    std::string v;
    while (std::getline(ss, v, ',')) {
      v = normalize_phrase(v);
      if (!v.empty() && std::find(variants.begin(), variants.end(), v) == variants.end()) {
        variants.push_back(v);
      }
    }
  }
  base.validate();
  return base;
}

std::vector<ChatDocument> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorKind::kLoad, "cannot open corpus " + path.string());
  std::vector<ChatDocument> docs;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  const std::string where = path.string() + ":";
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_phrase(line).empty()) continue;
    const std::string loc = where + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      Throw(ErrorKind::kParse, loc + ": malformed record: " + e.what());
    }
    if (!rec.is_object()) Throw(ErrorKind::kParse, loc + ": record is not an object");
    if (!rec.contains("id") || !rec["id"].is_string() ||
        rec["id"].get<std::string>().empty()) {
      Throw(ErrorKind::kParse, loc + ": missing or empty string field 'id'");
    }
    if (!rec.contains("text") || !rec["text"].is_string()) {
      Throw(ErrorKind::kParse, loc + ": missing string field 'text'");
    }
    std::vector<std::string> keyphrases;
    if (rec.contains("keyphrases")) {
      if (!rec["keyphrases"].is_array()) {
        Throw(ErrorKind::kParse, loc + ": 'keyphrases' must be an array");
      }
      for (const auto& k : rec["keyphrases"]) {
        if (!k.is_string()) {
          Throw(ErrorKind::kParse, loc + ": keyphrases must be strings");
        }
        keyphrases.push_back(k.get<std::string>());
      }
    }
    auto doc = make_document(rec["id"].get<std::string>(),
                             rec["text"].get<std::string>(), std::move(keyphrases));
    if (normalize_phrase(doc.text).empty()) {
      Throw(ErrorKind::kValidation, loc + ": document '" + doc.id + "' has empty text");
    }
    auto [it, inserted] = first_line.emplace(doc.id, line_no);
    if (!inserted) {
      Throw(ErrorKind::kValidation,
            where + " duplicate id '" + doc.id + "' on lines " +
                std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_corpus(const std::filesystem::path& path,
                 const std::vector<ChatDocument>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorKind::kLoad, "cannot write corpus " + path.string());
  for (const auto& doc : docs) {
    nlohmann::json rec;
    rec["id"] = doc.id;
    rec["text"] = doc.text;
    rec["keyphrases"] = doc.gold_keyphrases;
    out << rec.dump() << '\n';
  }
}

std::vector<CharSpan> align_keyphrase(std::string_view phrase, const ChatDocument& doc,
                                      const AlignmentRules& rules) {
  auto phrase_words = lex_words(phrase);
  if (phrase_words.empty()) return {};
  std::vector<LexiconEntry> lexicon;
  lexicon.reserve(rules.abbreviation_lexicon.size());
  for (const auto& [key, variants] : rules.abbreviation_lexicon) {
    LexiconEntry entry{lex_words(key), {}};
    for (const auto& v : variants) entry.variants.push_back(lex_words(v));
    lexicon.push_back(std::move(entry));
  }
  const auto text = lex(doc.text);
  PhraseMatcher matcher(text, std::move(phrase_words), rules, std::move(lexicon));
  for (Stage stage : {Stage::kExact, Stage::kLexicon, Stage::kSuffix, Stage::kEdit}) {
    auto spans = matcher.run(stage);
    if (!spans.empty()) return spans;
  }
  return {};
}

AnnotationStats annotate(ChatDocument& doc, const AlignmentRules& rules) {
  AnnotationStats stats;
  doc.gold_spans.clear();
  for (std::size_t i = 0; i < doc.gold_keyphrases.size(); ++i) {
    const std::string phrase = normalize_phrase(doc.gold_keyphrases[i]);
    auto spans = align_keyphrase(phrase, doc, rules);
    if (spans.empty()) {
      stats.unaligned.push_back(phrase);
      continue;
    }
    ++stats.aligned_phrases;
    stats.total_spans += spans.size();
    for (const auto& s : spans) doc.gold_spans.push_back({i, s});
  }
  std::stable_sort(doc.gold_spans.begin(), doc.gold_spans.end(),
                   [](const GoldSpan& a, const GoldSpan& b) {
                     return a.span.begin < b.span.begin;
                   });
  return stats;
}

std::vector<std::string> evaluation_gold(const ChatDocument& doc) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.gold_keyphrases.size(); ++i) {
    std::string form = normalize_phrase(doc.gold_keyphrases[i]);
    for (const auto& gs : doc.gold_spans) {
      if (gs.phrase_index == i) {
        form = render_span(doc.text, gs.span);
        break;
      }
    }
    if (!form.empty() && seen.insert(form).second) out.push_back(std::move(form));
  }
  return out;
}

double FoldAssignment::balance_ratio() const {
  if (fold_word_totals.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(fold_word_totals.begin(), fold_word_totals.end());
  if (*lo == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

FoldAssignment make_folds(const std::vector<ChatDocument>& docs, std::size_t n_folds,
                          std::uint64_t seed) {
  if (n_folds == 0 || n_folds > docs.size()) {
    Throw(ErrorKind::kArgument, "n_folds must be in [1, " + std::to_string(docs.size()) +
                                    "], got " + std::to_string(n_folds));
  }
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (docs[a].word_count != docs[b].word_count) {
      return docs[a].word_count > docs[b].word_count;
    }
    return docs[a].id < docs[b].id;
  });
  // Seeded shuffle inside each run of equal word counts.
  Rng rng(derive_seed(seed, 0));
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && docs[order[j]].word_count == docs[order[i]].word_count) ++j;
    std::vector<std::size_t> run(order.begin() + i, order.begin() + j);
    shuffle(run, rng);
    std::copy(run.begin(), run.end(), order.begin() + i);
    i = j;
  }

  FoldAssignment fa;
  fa.n_folds = n_folds;
  fa.fold_word_totals.assign(n_folds, 0);
  std::vector<std::size_t> fold_sizes(n_folds, 0);
  for (std::size_t idx : order) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < n_folds; ++f) {
      if (fa.fold_word_totals[f] < fa.fold_word_totals[best] ||
          (fa.fold_word_totals[f] == fa.fold_word_totals[best] &&
           fold_sizes[f] < fold_sizes[best])) {
        best = f;
      }
    }
    if (!fa.doc_to_fold.emplace(docs[idx].id, best).second) {
      Throw(ErrorKind::kValidation, "duplicate document id '" + docs[idx].id + "'");
    }
    fa.fold_word_totals[best] += docs[idx].word_count;
    ++fold_sizes[best];
  }
  return fa;
}

}  // namespace jointkpe

#include "jointkpe/baselines.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "jointkpe/error.h"
#include "jointkpe/text.h"

namespace jointkpe {
namespace {

std::string join_key(const std::vector<Lexeme>& lx, std::size_t begin, std::size_t n) {
  std::string key;
  for (std::size_t i = begin; i < begin + n; ++i) {
    if (i > begin) key.push_back('\x1f');
    key += lx[i].text;
  }
  return key;
}

std::string surface_of(std::string_view text, const std::vector<Lexeme>& lx,
                       std::size_t begin, std::size_t n) {
  return render_span(text, {lx[begin].span.begin, lx[begin + n - 1].span.end});
}

// Collects phrase occurrences keyed by token sequence, first surface wins.
class PhraseTable {
 public:
  void add(std::string key, std::string_view text, const std::vector<Lexeme>& lx,
           std::size_t begin, std::size_t n, double score) {
    if (index_.contains(key)) return;
    index_.emplace(std::move(key), out_.size());
    out_.push_back({surface_of(text, lx, begin, n), score});
  }
  bool contains(const std::string& key) const { return index_.contains(key); }

  std::vector<ScoredPhrase> ranked(std::size_t c) && {
    std::sort(out_.begin(), out_.end(), [](const ScoredPhrase& a, const ScoredPhrase& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.surface < b.surface;
    });
    if (out_.size() > c) out_.resize(c);
    return std::move(out_);
  }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<ScoredPhrase> out_;
};

bool line_break_between(std::string_view text, const Lexeme& a, const Lexeme& b) {
  return text.substr(a.span.end, b.span.begin - a.span.end).find('\n') != std::string_view::npos;
}

}  // namespace

IdfTable IdfTable::build(const std::vector<ChatDocument>& docs) {
  IdfTable t;
  t.n_docs_ = docs.size();
  for (const auto& doc : docs) {
    std::set<std::string> seen;
    for (auto& lx : lex(doc.text)) seen.insert(std::move(lx.text));
    for (const auto& w : seen) ++t.doc_freq_[w];
  }
  return t;
}

std::size_t IdfTable::doc_freq(std::string_view token) const {
  auto it = doc_freq_.find(std::string(token));
  return it == doc_freq_.end() ? 0 : it->second;
}

double IdfTable::idf(std::string_view token) const {
  if (n_docs_ == 0) Throw(ErrorKind::kArgument, "idf table built from an empty corpus");
  return std::log(static_cast<double>(n_docs_) / (1.0 + static_cast<double>(doc_freq(token)))) +
         1.0;
}

std::vector<ScoredPhrase> tfidf_extract(const ChatDocument& doc, const IdfTable& idf,
                                        std::size_t c, std::size_t k_max,
                                        const StopwordSet& stopwords) {
  if (c < 1 || k_max < 1) Throw(ErrorKind::kArgument, "c and k_max must be >= 1");
  const auto lx = lex(doc.text);
  std::unordered_map<std::string, double> tf;
  for (const auto& l : lx) tf[l.text] += 1.0;
  std::vector<double> weight(lx.size());
  std::vector<bool> edge_ok(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    weight[i] = tf[lx[i].text] * idf.idf(lx[i].text);
    edge_ok[i] = !is_punct_token(lx[i].text) && !stopwords.contains(lx[i].text);
  }
  PhraseTable table;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    if (!edge_ok[i]) continue;
    double sum = 0.0;
    for (std::size_t n = 1; n <= k_max && i + n <= lx.size(); ++n) {
      sum += weight[i + n - 1];
      if (!edge_ok[i + n - 1]) continue;
      table.add(join_key(lx, i, n), doc.text, lx, i, n, sum / static_cast<double>(n));
    }
  }
  return std::move(table).ranked(c);
}

std::vector<ScoredPhrase> rake_extract(const ChatDocument& doc, const StopwordSet& stopwords,
                                       std::size_t c, std::size_t k_max) {
  if (c < 1) Throw(ErrorKind::kArgument, "c must be >= 1");
  if (stopwords.empty()) Throw(ErrorKind::kArgument, "RAKE needs a nonempty stopword set");
  const auto lx = lex(doc.text);
  // [begin, end) runs of content tokens.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t start = 0;
  bool open = false;
  for (std::size_t i = 0; i <= lx.size(); ++i) {
    const bool delim = i == lx.size() || is_punct_token(lx[i].text) ||
                       stopwords.contains(lx[i].text) ||
                       (open && line_break_between(doc.text, lx[i - 1], lx[i]));
    if (open && delim) {
      runs.emplace_back(start, i);
      open = false;
    }
    if (i < lx.size() && !open && !is_punct_token(lx[i].text) && !stopwords.contains(lx[i].text)) {
      start = i;
      open = true;
    }
  }
  std::unordered_map<std::string, double> freq, degree;
  for (auto [b, e] : runs) {
    for (std::size_t i = b; i < e; ++i) {
      freq[lx[i].text] += 1.0;
      degree[lx[i].text] += static_cast<double>(e - b);
    }
  }
  PhraseTable table;
  for (auto [b, e] : runs) {
    const std::size_t n = e - b;
    if (n > k_max) continue;
    std::string key = join_key(lx, b, n);
    if (table.contains(key)) continue;
    double score = 0.0;
    for (std::size_t i = b; i < e; ++i) score += degree[lx[i].text] / freq[lx[i].text];
    table.add(std::move(key), doc.text, lx, b, n, score);
  }
  return std::move(table).ranked(c);
}

TextRankResult textrank_scores(const std::vector<std::vector<std::size_t>>& adjacency,
                               const TextRankOptions& opts) {
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) {
    Throw(ErrorKind::kArgument, "damping must be in [0, 1)");
  }
  TextRankResult r;
  const std::size_t n = adjacency.size();
  if (n == 0) {
    r.converged = true;
    return r;
  }
  const double base = (1.0 - opts.damping) / static_cast<double>(n);
  std::vector<double> s(n, 1.0 / static_cast<double>(n)), next(n);
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j : adjacency[i]) {
        acc += s[j] / static_cast<double>(adjacency[j].size());
      }
      next[i] = base + opts.damping * acc;
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta += std::abs(next[i] - s[i]);
    s.swap(next);
    r.iterations = it + 1;
    r.last_delta = delta;
    if (delta < opts.tol) {
      r.converged = true;
      break;
    }
  }
  r.raw = s;
  double total = 0.0;
  for (double v : s) total += v;
  r.normalized.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.normalized[i] = s[i] / total;
  return r;
}

std::vector<ScoredPhrase> textrank_extract(const ChatDocument& doc,
                                           const StopwordSet& stopwords, std::size_t c,
                                           const TextRankOptions& opts, std::size_t k_max) {
  if (c < 1) Throw(ErrorKind::kArgument, "c must be >= 1");
  if (opts.window < 2) Throw(ErrorKind::kArgument, "TextRank window must be >= 2");
  const auto lx = lex(doc.text);
  std::unordered_map<std::string, std::size_t> node;
  std::vector<std::string> words;
  std::vector<std::ptrdiff_t> node_of(lx.size(), -1);
  std::vector<std::size_t> content;  // node ids in text order
  for (std::size_t i = 0; i < lx.size(); ++i) {
    if (is_punct_token(lx[i].text) || stopwords.contains(lx[i].text)) continue;
    auto [it, inserted] = node.try_emplace(lx[i].text, words.size());
    if (inserted) words.push_back(lx[i].text);
    node_of[i] = static_cast<std::ptrdiff_t>(it->second);
    content.push_back(it->second);
  }
  if (words.empty()) return {};

  std::vector<std::set<std::size_t>> edges(words.size());
  for (std::size_t i = 0; i < content.size(); ++i) {
    for (std::size_t j = i + 1; j < content.size() && j < i + opts.window; ++j) {
      if (content[i] == content[j]) continue;
      edges[content[i]].insert(content[j]);
      edges[content[j]].insert(content[i]);
    }
  }
  std::vector<std::vector<std::size_t>> adjacency(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) adjacency[i].assign(edges[i].begin(), edges[i].end());
  const TextRankResult tr = textrank_scores(adjacency, opts);

  std::vector<std::size_t> order(words.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (tr.normalized[a] != tr.normalized[b]) return tr.normalized[a] > tr.normalized[b];
    return words[a] < words[b];
  });
  const std::size_t n_seeds = (words.size() + 2) / 3;
  std::vector<bool> seed(words.size(), false);
  for (std::size_t i = 0; i < n_seeds; ++i) seed[order[i]] = true;

  PhraseTable table;
  std::size_t i = 0;
  while (i < lx.size()) {
    if (node_of[i] < 0 || !seed[static_cast<std::size_t>(node_of[i])]) {
      ++i;
      continue;
    }
    std::size_t e = i;
    double score = 0.0;
    while (e < lx.size() && node_of[e] >= 0 && seed[static_cast<std::size_t>(node_of[e])]) {
      score += tr.normalized[static_cast<std::size_t>(node_of[e])];
      ++e;
    }
    if (e - i <= k_max) table.add(join_key(lx, i, e - i), doc.text, lx, i, e - i, score);
    i = e;
  }
  return std::move(table).ranked(c);
}

}  // namespace jointkpe

#include "jointkpe/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "jointkpe/error.h"

namespace jointkpe {

Vocabulary::Vocabulary() {
  for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) {
    token_to_id_.emplace(s, static_cast<TokenId>(id_to_token_.size()));
    id_to_token_.emplace_back(s);
  }
}

TokenId Vocabulary::add(std::string_view token) {
  auto it = token_to_id_.find(std::string(token));
  if (it != token_to_id_.end()) return it->second;
  auto id = static_cast<TokenId>(id_to_token_.size());
  id_to_token_.emplace_back(token);
  token_to_id_.emplace(std::string(token), id);
  return id;
}

TokenId Vocabulary::lookup(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    Throw(ErrorKind::kArgument, "token id out of range: " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorKind::kLoad, "cannot write vocabulary " + path.string());
  for (std::size_t i = kNumSpecials; i < id_to_token_.size(); ++i) {
    out << id_to_token_[i] << '\n';
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorKind::kLoad, "cannot open vocabulary " + path.string());
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || v.contains(line)) {
      Throw(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                   ": empty or duplicate token");
    }
    v.add(line);
  }
  return v;
}

Vocabulary build_vocab(const std::vector<ChatDocument>& docs, std::size_t min_freq) {
  if (min_freq < 1) Throw(ErrorKind::kArgument, "min_freq must be >= 1");
  if (docs.empty()) Throw(ErrorKind::kArgument, "cannot build a vocabulary from no documents");
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : docs) {
    for (auto& l : lex(doc.text)) ++freq[std::move(l.text)];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [tok, f] : freq) {
    if (f >= min_freq) entries.emplace_back(tok, f);
  }
  // map iteration is lexicographic; stable sort keeps that order among ties.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [tok, f] : entries) {
    if (v.contains(tok)) continue;  // a literal "[UNK]" in the text
    v.add(tok);
  }
  return v;
}

TokenizedDocument tokenize(const ChatDocument& doc, const Vocabulary& vocab,
                           std::size_t k_max) {
  TokenizedDocument out;
  out.doc_id = doc.id;
  auto lexemes = lex(doc.text);
  out.token_ids.reserve(lexemes.size());
  out.offsets.reserve(lexemes.size());
  std::map<std::size_t, std::size_t> starts, ends;  // char offset -> token index
  for (std::size_t i = 0; i < lexemes.size(); ++i) {
    out.token_ids.push_back(vocab.lookup(lexemes[i].text));
    out.offsets.push_back(lexemes[i].span);
    starts.emplace(lexemes[i].span.begin, i);
    ends.emplace(lexemes[i].span.end, i);
  }
  for (const auto& gs : doc.gold_spans) {
    auto s = starts.find(gs.span.begin);
    auto e = ends.find(gs.span.end);
    if (s == starts.end() || e == ends.end() || e->second < s->second) {
      spdlog::warn("{}: gold span [{}, {}) does not fall on token boundaries; dropped",
                   doc.id, gs.span.begin, gs.span.end);
      ++out.dropped_gold_spans;
      continue;
    }
    TokenSpan ts{s->second, e->second - s->second + 1};
    if (ts.length > k_max) {
      spdlog::warn("{}: gold span of {} tokens exceeds k_max={}; dropped", doc.id,
                   ts.length, k_max);
      ++out.dropped_gold_spans;
      continue;
    }
    out.gold_label_spans.push_back(ts);
  }
  std::sort(out.gold_label_spans.begin(), out.gold_label_spans.end());
  out.gold_label_spans.erase(
      std::unique(out.gold_label_spans.begin(), out.gold_label_spans.end()),
      out.gold_label_spans.end());
  return out;
}

std::vector<TokenBlock> split_range(const TokenizedDocument& tdoc, std::size_t begin,
                                    std::size_t end, std::size_t m) {
  if (m < 3) Throw(ErrorKind::kArgument, "block size m must be >= 3");
  if (begin >= end || end > tdoc.token_ids.size()) {
    Throw(ErrorKind::kArgument, "nothing to encode in document '" + tdoc.doc_id + "'");
  }
  const std::size_t piece = m - 2;
  std::vector<TokenBlock> blocks;
  for (std::size_t b = begin; b < end; b += piece) {
    const std::size_t e = std::min(end, b + piece);
    TokenBlock block;
    block.content_begin = b;
    block.content_end = e;
    block.ids.reserve(e - b + 2);
    block.ids.push_back(Vocabulary::kCls);
    block.ids.insert(block.ids.end(), tdoc.token_ids.begin() + static_cast<std::ptrdiff_t>(b),
                     tdoc.token_ids.begin() + static_cast<std::ptrdiff_t>(e));
    block.ids.push_back(Vocabulary::kSep);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

std::vector<TokenBlock> split_blocks(const TokenizedDocument& tdoc, std::size_t m) {
  return split_range(tdoc, 0, tdoc.token_ids.size(), m);
}

std::vector<SampleSequence> split_samples(const TokenizedDocument& tdoc,
                                          std::size_t max_tokens, std::size_t m) {
  if (m < 3) Throw(ErrorKind::kArgument, "block size m must be >= 3");
  if (max_tokens < m) {
    Throw(ErrorKind::kArgument, "N (" + std::to_string(max_tokens) +
                                    ") must be >= m (" + std::to_string(m) + ")");
  }
  const std::size_t length = tdoc.token_ids.size();
  if (length == 0) {
    Throw(ErrorKind::kArgument, "nothing to encode in document '" + tdoc.doc_id + "'");
  }
  const std::size_t capacity = (max_tokens / m) * (m - 2);
  const std::size_t n_samples = (length + capacity - 1) / capacity;
  const std::size_t base = length / n_samples;
  const std::size_t extra = length % n_samples;

  std::vector<SampleSequence> samples;
  samples.reserve(n_samples);
  std::size_t begin = 0;
  std::size_t block_index = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::size_t size = base + (s < extra ? 1 : 0);
    SampleSequence sample;
    sample.content_begin = begin;
    sample.content_end = begin + size;
    sample.blocks = split_range(tdoc, sample.content_begin, sample.content_end, m);
    sample.first_block_index = block_index;
    block_index += sample.blocks.size();
    for (const auto& b : sample.blocks) sample.total_tokens += b.size();
    for (const auto& span : tdoc.gold_label_spans) {
      const bool inside = span.start >= sample.content_begin && span.end() <= sample.content_end;
      const bool crosses = !inside && span.start < sample.content_end &&
                           span.end() > sample.content_begin;
      if (inside) {
        sample.gold_label_spans.push_back(span);
      } else if (crosses) {
        ++sample.dropped_gold_spans;
        spdlog::warn("{}: gold span at token {} crosses a sample boundary; dropped for sample {}",
                     tdoc.doc_id, span.start, s);
      }
    }
    samples.push_back(std::move(sample));
    begin += size;
  }
  return samples;
}

}  // namespace jointkpe

#include "jointkpe/extractor.h"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "jointkpe/error.h"
#include "jointkpe/text.h"

namespace jointkpe {

bool ranks_before(const PhraseCandidate& a, const PhraseCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.sample != b.sample) return a.sample < b.sample;
  if (a.token_pos != b.token_pos) return a.token_pos < b.token_pos;
  if (a.n != b.n) return a.n < b.n;
  return a.surface < b.surface;
}

bool keep_candidate(const PhraseKey& key, const Vocabulary& vocab) {
  if (key.empty()) return false;
  if (is_punct_token(vocab.token(key.front())) || is_punct_token(vocab.token(key.back()))) {
    return false;
  }
  return std::find(key.begin(), key.end(), Vocabulary::kUnk) == key.end();
}

std::vector<PhraseCandidate> get_candidates(const NGramScoreTable& table,
                                            const TokenizedDocument& tdoc,
                                            std::string_view text, const Vocabulary& vocab,
                                            std::size_t c, std::size_t sample_index) {
  if (c < 1) Throw(ErrorKind::kArgument, "c must be >= 1");
  if (table.empty()) return {};
  const GlobalScores globals = global_pool(table);
  std::vector<PhraseCandidate> out;
  for (const GlobalCandidate& g : globals.candidates) {
    if (!keep_candidate(g.key, vocab)) continue;
    const NGramScores& layer = table.layers[g.best.layer];
    const auto pos = static_cast<std::size_t>(layer.token_starts[g.best.window]);
    const std::size_t n = layer.n;
    PhraseCandidate cand;
    cand.surface =
        render_span(text, {tdoc.offsets[pos].begin, tdoc.offsets[pos + n - 1].end});
    cand.token_key = g.key;
    cand.score = g.score;
    cand.sample = sample_index;
    cand.token_pos = pos;
    cand.n = n;
    out.push_back(std::move(cand));
  }
  std::sort(out.begin(), out.end(), ranks_before);
  if (out.size() > c) out.resize(c);
  return out;
}

std::vector<PhraseCandidate> merge_samples(
    std::span<const std::vector<PhraseCandidate>> per_sample, std::size_t c) {
  std::vector<PhraseCandidate> merged;
  std::unordered_map<PhraseKey, std::size_t, PhraseKeyHash> index;
  for (const auto& list : per_sample) {
    for (const PhraseCandidate& cand : list) {
      auto [it, inserted] = index.try_emplace(cand.token_key, merged.size());
      if (inserted) {
        merged.push_back(cand);
        continue;
      }
      PhraseCandidate& kept = merged[it->second];
      if (cand.score > kept.score || (cand.score == kept.score && cand.sample < kept.sample)) {
        kept = cand;
      }
    }
  }
  std::sort(merged.begin(), merged.end(), ranks_before);
  if (merged.size() > c) merged.resize(c);
  return merged;
}

void ExtractConfig::validate() const {
  if (c < 1) Throw(ErrorKind::kConfig, "c must be >= 1");
  if (block_size < 3) Throw(ErrorKind::kConfig, "block size must be >= 3");
  if (max_tokens < block_size) Throw(ErrorKind::kConfig, "max tokens must be >= block size");
}

std::vector<PhraseCandidate> extract_tokenized(const TokenizedDocument& tdoc,
                                               std::string_view text,
                                               const ModelParams& params,
                                               const Vocabulary& vocab,
                                               const ExtractConfig& cfg,
                                               const PrecomputedStore* store) {
  cfg.validate();
  if (tdoc.token_ids.empty()) return {};
  const auto samples = split_samples(tdoc, cfg.max_tokens, cfg.block_size);
  std::vector<std::vector<PhraseCandidate>> per_sample;
  per_sample.reserve(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const ForwardState state = forward_sample(params, tdoc, samples[s], s, store);
    per_sample.push_back(get_candidates(state.table, tdoc, text, vocab, kNoLimit, s));
  }
  return merge_samples(per_sample, cfg.c);
}

std::vector<PhraseCandidate> extract_document(const ChatDocument& doc,
                                              const ModelParams& params,
                                              const Vocabulary& vocab,
                                              const ExtractConfig& cfg,
                                              const PrecomputedStore* store) {
  if (vocab.size() != params.encoder.vocab_size() && params.encoder_kind == EncoderKind::kToy) {
    Throw(ErrorKind::kConfig, "vocabulary size " + std::to_string(vocab.size()) +
                                  " does not match the model's " +
                                  std::to_string(params.encoder.vocab_size()));
  }
  const TokenizedDocument tdoc = tokenize(doc, vocab, params.k_max());
  return extract_tokenized(tdoc, doc.text, params, vocab, cfg, store);
}

void write_candidates(std::ostream& out, std::span<const PhraseCandidate> ranked) {
  char buf[64];
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", ranked[i].score);
    out << (i + 1) << '\t' << buf << '\t' << ranked[i].surface << '\n';
  }
}

std::vector<std::string> surfaces(std::span<const PhraseCandidate> ranked) {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& c : ranked) out.push_back(c.surface);
  return out;
}

}  // namespace jointkpe

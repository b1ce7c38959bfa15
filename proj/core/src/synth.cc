#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "jointkpe/error.h"
#include "jointkpe/evaluator.h"
#include "jointkpe/rng.h"

namespace jointkpe {
namespace {

constexpr std::size_t kFillerPseudoWords = 1500;
constexpr std::size_t kPlantWords = 300;

// Common function words give the filler a chat-like Zipf head.
constexpr std::array<const char*, 60> kFunctionWords = {
    "i",    "you",  "the",  "to",    "a",    "and",   "it",   "is",   "that", "what",
    "me",   "my",   "in",   "do",    "so",   "u",     "lol",  "not",  "are",  "have",
    "be",   "was",  "for",  "on",    "just", "like",  "yeah", "ok",   "we",   "your",
    "with", "can",  "at",   "of",    "no",   "but",   "if",   "how",  "this", "know",
    "get",  "im",   "all",  "go",    "when", "there", "he",   "she",  "they", "out",
    "up",   "now",  "oh",   "did",   "want", "think", "would", "about", "then", "yes",
};

// Unique consonant-vowel pseudo-words in a fixed order.
std::vector<std::string> pseudo_words(std::size_t count) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                  "s", "t", "v", "z", "br", "dr", "gl", "kr", "pl", "st"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  Rng rng(derive_seed(0x5eed, 17));
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    const auto syllables = uniform_int(rng, 2, 3);
    std::string w;
    for (std::int64_t s = 0; s < syllables; ++s) {
      w += kOnsets[uniform_index(rng, std::size(kOnsets))];
      w += kVowels[uniform_index(rng, std::size(kVowels))];
    }
    if (uniform_index(rng, 3) == 0) w += "n";
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

const std::vector<std::string>& pseudo_pool() {
  static const std::vector<std::string> pool = [] {
    std::unordered_set<std::string> reserved(kFunctionWords.begin(), kFunctionWords.end());
    std::vector<std::string> out;
    for (auto& w : pseudo_words(kFillerPseudoWords + kPlantWords + 200)) {
      if (!reserved.contains(w)) out.push_back(std::move(w));
    }
    return out;
  }();
  return pool;
}

void check_range(std::size_t lo, std::size_t hi, const char* what) {
  if (lo > hi) Throw(ErrorKind::kArgument, std::string("inverted range for ") + what);
}

}  // namespace

std::vector<std::string> default_filler_vocab() {
  std::vector<std::string> out(kFunctionWords.begin(), kFunctionWords.end());
  const auto& pool = pseudo_pool();
  out.insert(out.end(), pool.begin(), pool.begin() + kFillerPseudoWords);
  return out;
}

std::vector<std::string> default_plant_vocab() {
  const auto& pool = pseudo_pool();
  return {pool.begin() + kFillerPseudoWords, pool.begin() + kFillerPseudoWords + kPlantWords};
}

std::vector<ChatDocument> synth_corpus(const SynthConfig& cfg) {
  const auto plant = cfg.plant_vocab.empty() ? default_plant_vocab() : cfg.plant_vocab;
  const auto filler = cfg.filler_vocab.empty() ? default_filler_vocab() : cfg.filler_vocab;
  if (plant.empty() || filler.empty()) Throw(ErrorKind::kArgument, "empty synthetic vocabulary");
  {
    const std::unordered_set<std::string> f(filler.begin(), filler.end());
    for (const auto& w : plant) {
      if (f.contains(w)) {
        Throw(ErrorKind::kArgument, "plant and filler vocabularies share '" + w + "'");
      }
    }
  }
  check_range(cfg.min_words, cfg.max_words, "document length");
  check_range(cfg.min_planted, cfg.max_planted, "planted phrases");
  check_range(cfg.min_phrase_len, cfg.max_phrase_len, "phrase length");
  check_range(cfg.min_repeats, cfg.max_repeats, "repeats");
  check_range(cfg.min_line_words, cfg.max_line_words, "line length");
  if (cfg.min_phrase_len < 1 || cfg.min_repeats < 1 || cfg.min_line_words < 1) {
    Throw(ErrorKind::kArgument, "phrase length, repeats and line length must be >= 1");
  }
  if (!cfg.shared_inventory && cfg.max_planted * cfg.max_phrase_len > plant.size()) {
    Throw(ErrorKind::kArgument, "plant vocabulary too small for distinct phrase words");
  }

  // Fixed phrases partitioning the plant vocabulary; each plant word belongs
  // to exactly one of them.
  std::vector<std::pair<std::string, std::size_t>> inventory;
  if (cfg.shared_inventory) {
    Rng rng(derive_seed(cfg.seed, 0xfeed));
    std::vector<std::size_t> ids(plant.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    shuffle(ids, rng);
    std::size_t next = 0;
    while (next < ids.size()) {
      auto len = static_cast<std::size_t>(uniform_int(
          rng, std::int64_t(cfg.min_phrase_len), std::int64_t(cfg.max_phrase_len)));
      if (next + len > ids.size()) break;
      std::string phrase;
      for (std::size_t k = 0; k < len; ++k) {
        if (k > 0) phrase += ' ';
        phrase += plant[ids[next++]];
      }
      inventory.emplace_back(std::move(phrase), len);
    }
    if (inventory.size() < cfg.max_planted) {
      Throw(ErrorKind::kArgument, "plant vocabulary too small for a phrase inventory of " +
                                      std::to_string(cfg.max_planted) + " phrases");
    }
  }

  std::vector<double> cdf(filler.size());
  double total = 0.0;
  for (std::size_t r = 0; r < filler.size(); ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), cfg.zipf_exponent);
    cdf[r] = total;
  }

  std::vector<ChatDocument> docs;
  docs.reserve(cfg.n_docs);
  for (std::size_t di = 0; di < cfg.n_docs; ++di) {
    Rng rng(derive_seed(cfg.seed, di));
    const auto words = static_cast<std::size_t>(
        uniform_int(rng, std::int64_t(cfg.min_words), std::int64_t(cfg.max_words)));
    const auto n_phrases = static_cast<std::size_t>(
        uniform_int(rng, std::int64_t(cfg.min_planted), std::int64_t(cfg.max_planted)));

    std::vector<std::string> phrases;
    std::vector<std::size_t> occurrences;  // phrase index per planted copy
    std::size_t plant_words = 0;
    auto plant_copies = [&](std::string phrase, std::size_t len) {
      const auto reps = static_cast<std::size_t>(
          uniform_int(rng, std::int64_t(cfg.min_repeats), std::int64_t(cfg.max_repeats)));
      for (std::size_t r = 0; r < reps; ++r) occurrences.push_back(phrases.size());
      plant_words += len * reps;
      phrases.push_back(std::move(phrase));
    };
    if (cfg.shared_inventory) {
      std::vector<std::size_t> pick(inventory.size());
      for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
      shuffle(pick, rng);
      for (std::size_t p = 0; p < n_phrases; ++p) {
        const auto& [phrase, len] = inventory[pick[p]];
        plant_copies(phrase, len);
      }
    } else {
      std::vector<std::size_t> plant_ids(plant.size());
      for (std::size_t i = 0; i < plant_ids.size(); ++i) plant_ids[i] = i;
      shuffle(plant_ids, rng);
      std::size_t next_plant = 0;
      for (std::size_t p = 0; p < n_phrases; ++p) {
        const auto len = static_cast<std::size_t>(uniform_int(
            rng, std::int64_t(cfg.min_phrase_len), std::int64_t(cfg.max_phrase_len)));
        std::string phrase;
        for (std::size_t k = 0; k < len; ++k) {
          if (k > 0) phrase += ' ';
          phrase += plant[plant_ids[next_plant++]];
        }
        plant_copies(std::move(phrase), len);
      }
    }
    shuffle(occurrences, rng);

    // Copies go into distinct gaps strictly between filler words, so no two
    // planted phrases ever touch.
    const std::size_t n_filler =
        std::max(words > plant_words ? words - plant_words : 0, occurrences.size() + 1);
    std::vector<std::size_t> gaps(n_filler - 1);
    for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = i + 1;
    for (std::size_t i = 0; i < occurrences.size(); ++i) {
      std::swap(gaps[i], gaps[i + uniform_index(rng, gaps.size() - i)]);
    }
    std::vector<std::ptrdiff_t> at_gap(n_filler, -1);
    for (std::size_t i = 0; i < occurrences.size(); ++i) {
      at_gap[gaps[i]] = static_cast<std::ptrdiff_t>(occurrences[i]);
    }

    std::string text;
    std::size_t line_words = 0;
    auto line_target = static_cast<std::size_t>(
        uniform_int(rng, std::int64_t(cfg.min_line_words), std::int64_t(cfg.max_line_words)));
    auto emit = [&](const std::string& unit, std::size_t unit_words) {
      if (!text.empty()) text += line_words == 0 ? '\n' : ' ';
      text += unit;
      line_words += unit_words;
      if (line_words >= line_target) {
        line_words = 0;
        line_target = static_cast<std::size_t>(uniform_int(
            rng, std::int64_t(cfg.min_line_words), std::int64_t(cfg.max_line_words)));
      }
    };
    for (std::size_t i = 0; i < n_filler; ++i) {
      if (at_gap[i] >= 0) {
        const std::string& ph = phrases[static_cast<std::size_t>(at_gap[i])];
        emit(ph, static_cast<std::size_t>(std::count(ph.begin(), ph.end(), ' ')) + 1);
      }
      const double u = uniform_unit(rng) * total;
      const auto r = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                                              cdf.begin());
      emit(filler[std::min(r, filler.size() - 1)], 1);
    }
    docs.push_back(make_document("synth-" + std::to_string(cfg.seed) + "-" + std::to_string(di),
                                 std::move(text), std::move(phrases)));
  }
  return docs;
}

}  // namespace jointkpe

#include "jointkpe/toy.h"

#include <algorithm>

#include "jointkpe/error.h"
#include "jointkpe/rng.h"

namespace jointkpe {

ToyCase random_toy_case(std::uint64_t seed, std::size_t max_d, std::size_t max_tokens,
                        double param_scale) {
  if (max_d < 2 || max_tokens < 8) {
    Throw(ErrorKind::kArgument, "toy cases need max_d >= 2 and max_tokens >= 8");
  }
  Rng rng(derive_seed(seed, 77));
  static const char* kWords[] = {"meet", "park", "pics", "send", "now",  "secret",
                                 "mom",  "bus",  "ok",   "call", "later", "cam"};
  const auto types = static_cast<std::size_t>(uniform_int(rng, 4, std::size(kWords)));
  const auto length = static_cast<std::size_t>(uniform_int(rng, 8, std::int64_t(max_tokens)));

  std::vector<std::string> words;
  std::string text;
  for (std::size_t i = 0; i < length; ++i) {
    words.emplace_back(kWords[uniform_index(rng, types)]);
    if (i > 0) text += (uniform_index(rng, 6) == 0) ? "\n" : " ";
    text += words.back();
  }
  const std::size_t k_max = static_cast<std::size_t>(uniform_int(rng, 1, 7));
  std::vector<std::string> gold;
  const auto n_gold = static_cast<std::size_t>(uniform_int(rng, 1, 3));
  for (std::size_t g = 0; g < n_gold; ++g) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, std::int64_t(std::min<std::size_t>(k_max, 3))));
    const auto start = uniform_index(rng, length - n + 1);
    std::string phrase;
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0) phrase += ' ';
      phrase += words[start + j];
    }
    if (std::find(gold.begin(), gold.end(), phrase) == gold.end()) gold.push_back(phrase);
  }

  ToyCase c;
  c.doc = make_document("toy-" + std::to_string(seed), text, gold);
  annotate(c.doc, AlignmentRules{});
  c.vocab = build_vocab({c.doc}, 1);

  ModelConfig mc;
  mc.d = static_cast<std::size_t>(uniform_int(rng, 2, std::int64_t(max_d)));
  mc.d_g = static_cast<std::size_t>(uniform_int(rng, 2, std::int64_t(max_d)));
  mc.k_max = k_max;
  mc.mix_window = uniform_index(rng, 2) == 0 ? 1 : 3;
  mc.seed = derive_seed(seed, 78);
  c.params = init_model(mc, c.vocab.size());
  for (auto& t : c.params.tensors()) {
    for (double& v : t.values()) v = uniform_real(rng, -param_scale, param_scale);
  }

  c.tdoc = tokenize(c.doc, c.vocab, k_max);
  const auto m = static_cast<std::size_t>(uniform_int(rng, 6, 24));
  c.sample = split_samples(c.tdoc, std::max<std::size_t>(m, 8192 / m * m), m).front();
  c.description = "d=" + std::to_string(mc.d) + " d_g=" + std::to_string(mc.d_g) +
                  " k_max=" + std::to_string(k_max) + " w=" + std::to_string(mc.mix_window) +
                  " m=" + std::to_string(m) + " tokens=" + std::to_string(c.tdoc.token_ids.size()) +
                  " blocks=" + std::to_string(c.sample.blocks.size());
  return c;
}

}  // namespace jointkpe

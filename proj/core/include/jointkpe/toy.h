#ifndef JOINTKPE_TOY_H_
#define JOINTKPE_TOY_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "jointkpe/corpus.h"
#include "jointkpe/kpe_core.h"
#include "jointkpe/tokenizer.h"

namespace jointkpe {

// A tiny randomly configured model plus a short labelled document, used for
// gradient checks.
struct ToyCase {
  ChatDocument doc;
  Vocabulary vocab;
  TokenizedDocument tdoc;
  SampleSequence sample;
  ModelParams params;
  std::string description;
};

// d, d_g in [2, max_d]; k_max in [1, 7]; w in {1, 3}; a document of
// [8, max_tokens] tokens over a small word set with 1-3 gold phrases; block
// size small enough that most cases span several blocks. All parameters are
// drawn uniform in [-param_scale, param_scale] so activations are not
// crowded around the ReLU kink.
ToyCase random_toy_case(std::uint64_t seed, std::size_t max_d = 8, std::size_t max_tokens = 50,
                        double param_scale = 0.5);

}  // namespace jointkpe

#endif  // JOINTKPE_TOY_H_

#ifndef JOINTKPE_TRAINER_H_
#define JOINTKPE_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "jointkpe/corpus.h"
#include "jointkpe/kpe_core.h"
#include "jointkpe/tokenizer.h"

namespace jointkpe {

struct TrainConfig {
  double peak_lr = 5e-5;
  double warmup_fraction = 0.1;
  std::size_t epochs = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double eps = 1e-8;
  double grad_clip_norm = 1.0;  // <= 0 disables clipping
  std::size_t neg_sample_cap = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

// Number of linear warmup steps for a schedule of total_steps.
std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& cfg);

// One-cycle schedule: linear 0 -> peak_lr over the warmup, then
// peak_lr * (1 + cos(pi * t)) / 2 down to 0 at total_steps.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

// First and second moment estimates, shaped like the parameters.
struct OptimizerState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  static OptimizerState zeros_like(const ModelParams& params);
};

struct StepStats {
  double grad_norm = 0.0;
  double clip_scale = 1.0;
};

// AdamW: clip grads to cfg.grad_clip_norm (global L2), decay parameters by
// (1 - lr * weight_decay), then apply the bias-corrected adaptive update.
// Frozen tensors are left untouched. Throws kNumeric naming the first tensor
// with a non-finite gradient.
StepStats optimizer_step(ModelParams& params, ModelParams grads, OptimizerState& state,
                         double lr, const TrainConfig& cfg);

// Tokenized documents and their samples, ready for the training loop.
struct TrainingSet {
  struct Item {
    std::size_t doc = 0;
    std::size_t sample = 0;
  };
  std::vector<TokenizedDocument> docs;
  std::vector<std::vector<SampleSequence>> samples;  // per doc
  std::vector<PhraseKeySet> gold;                    // per doc
  std::vector<Item> items;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t block_size = kDefaultBlockSize;
};

// Documents must already be annotated (gold spans filled). Documents with no
// tokens are skipped.
TrainingSet make_training_set(const std::vector<ChatDocument>& docs, const Vocabulary& vocab,
                              std::size_t k_max, std::size_t max_tokens = kDefaultMaxTokens,
                              std::size_t block_size = kDefaultBlockSize);

struct StepLog {
  std::size_t epoch = 0;
  std::size_t step = 0;
  LossBreakdown loss;
  double lr = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double mean_rank = 0.0;
  double mean_chunk = 0.0;
  double mean_kpe = 0.0;
};

struct TrainResult {
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
};

struct TrainHooks {
  // Receives `epoch,step,loss_rank,loss_chunk,loss_kpe,lr` lines.
  std::ostream* loss_log = nullptr;
  // Rewritten after every epoch when non-empty.
  std::filesystem::path checkpoint;
  std::function<void(const EpochLog&)> on_epoch;
  const PrecomputedStore* store = nullptr;
};

// Online (batch size 1) training over epochs x seeded-shuffled samples.
// Throws kNumeric if a loss turns non-finite; the checkpoint from the last
// completed epoch is left in place.
TrainResult train(const TrainingSet& data, ModelParams& params, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

// Checkpoint = model serialization followed by "JKPEOPT1", u64 step,
// u64 epochs_done, then m and v tensors in the same order.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptimizerState& state, std::size_t epochs_done);
struct Checkpoint {
  ModelParams params;
  OptimizerState state;
  std::size_t epochs_done = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct GradCheckOptions {
  double eps = 1e-3;
  double tolerance = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-7;
  std::size_t neg_sample_cap = 64;
  std::uint64_t seed = 0;
  // Test hook applied to the analytic gradient before comparison.
  std::function<void(ModelParams&)> corrupt;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  // Parameters whose +/- eps probe changed a ReLU sign, an active hinge pair
  // or a max-pool argmax; central differences are meaningless there.
  std::size_t kink_excluded = 0;
  std::vector<std::pair<std::string, double>> per_tensor;  // max rel error
  bool passed = false;
};

// Central finite differences of loss_kpe over every trainable scalar,
// compared against backward().
GradCheckReport grad_check(const ModelParams& params, const TokenizedDocument& tdoc,
                           const SampleSequence& sample, const GradCheckOptions& opts = {},
                           const PrecomputedStore* store = nullptr);

}  // namespace jointkpe

#endif  // JOINTKPE_TRAINER_H_

#include "jointkpe/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include <spdlog/spdlog.h>

#include "jointkpe/error.h"
#include "jointkpe/model_io.h"
#include "jointkpe/rng.h"

namespace jointkpe {
namespace {

constexpr char kOptMagic[8] = {'J', 'K', 'P', 'E', 'O', 'P', 'T', '1'};

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  return (h ^ v) * 1099511628211ULL;
}

struct Evaluation {
  double loss = 0.0;
  std::uint64_t signature = 0;
};

// loss_kpe plus a fingerprint of every piecewise-linear branch taken.
Evaluation evaluate(const ModelParams& params, const TokenizedDocument& tdoc,
                    const SampleSequence& sample, const PhraseKeySet& gold,
                    const GradCheckOptions& opts, const PrecomputedStore* store) {
  const ForwardState state = forward_sample(params, tdoc, sample, 0, store);
  const GlobalScores globals = global_pool(state.table);
  const RankLoss rank = margin_rank_loss(globals, gold, opts.neg_sample_cap, opts.seed);
  const ChunkLoss chunk = chunk_bce_loss(state.table, sample.gold_label_spans);
  const LossBreakdown loss =
      combined_loss(rank.skipped ? std::nullopt : std::optional<double>(rank.loss), chunk.loss);

  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& layer : state.reps.layers) {
    for (Eigen::Index i = 0; i < layer.pre.size(); ++i) {
      h = mix(h, layer.pre.data()[i] > 0.0 ? 1 : 0);
    }
  }
  for (const auto& c : globals.candidates) h = mix(mix(h, c.best.layer), c.best.window);
  for (std::size_t p : rank.positives) {
    for (std::size_t m : rank.negatives) {
      h = mix(h, 1.0 - globals.candidates[p].score + globals.candidates[m].score > 0.0 ? 1 : 0);
    }
  }
  return {loss.loss_kpe, h};
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { Throw(ErrorKind::kConfig, what); };
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) fail("peak_lr must be > 0");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) fail("warmup_fraction must be in (0, 1)");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("betas must be in [0, 1)");
  }
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (!(eps > 0.0)) fail("eps must be > 0");
}

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps <= 1) return total_steps;
  auto w = static_cast<std::size_t>(
      std::llround(cfg.warmup_fraction * static_cast<double>(total_steps)));
  return std::clamp<std::size_t>(w, 1, total_steps - 1);
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps < 1) Throw(ErrorKind::kArgument, "total_steps must be >= 1");
  if (step > total_steps) {
    Throw(ErrorKind::kArgument, "step " + std::to_string(step) + " is past the schedule end " +
                                    std::to_string(total_steps));
  }
  const std::size_t warmup = warmup_steps(total_steps, cfg);
  if (step <= warmup) {
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  const double t = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return cfg.peak_lr * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
}

OptimizerState OptimizerState::zeros_like(const ModelParams& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

StepStats optimizer_step(ModelParams& params, ModelParams grads, OptimizerState& state,
                         double lr, const TrainConfig& cfg) {
  auto p_t = params.tensors();
  auto g_t = grads.tensors();
  auto m_t = state.m.tensors();
  auto v_t = state.v.tensors();
  if (g_t.size() != p_t.size() || m_t.size() != p_t.size() || v_t.size() != p_t.size()) {
    Throw(ErrorKind::kArgument, "optimizer tensors do not match the parameters");
  }
  StepStats stats;
  double sq = 0.0;
  for (std::size_t t = 0; t < p_t.size(); ++t) {
    if (g_t[t].size() != p_t[t].size() || m_t[t].size() != p_t[t].size() ||
        v_t[t].size() != p_t[t].size()) {
      Throw(ErrorKind::kArgument, "shape mismatch in tensor " + p_t[t].name);
    }
    if (!p_t[t].trainable) continue;
    for (double g : g_t[t].values()) {
      if (!std::isfinite(g)) {
        Throw(ErrorKind::kNumeric, "non-finite gradient in tensor " + p_t[t].name);
      }
      sq += g * g;
    }
  }
  stats.grad_norm = std::sqrt(sq);
  if (cfg.grad_clip_norm > 0.0 && stats.grad_norm > cfg.grad_clip_norm) {
    stats.clip_scale = cfg.grad_clip_norm / stats.grad_norm;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - lr * cfg.weight_decay;
  for (std::size_t k = 0; k < p_t.size(); ++k) {
    if (!p_t[k].trainable) continue;
    double* p = p_t[k].data;
    const double* g = g_t[k].data;
    double* m = m_t[k].data;
    double* v = v_t[k].data;
    for (std::size_t i = 0; i < p_t[k].size(); ++i) {
      const double gi = g[i] * stats.clip_scale;
      p[i] *= decay;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  return stats;
}

TrainingSet make_training_set(const std::vector<ChatDocument>& docs, const Vocabulary& vocab,
                              std::size_t k_max, std::size_t max_tokens, std::size_t block_size) {
  TrainingSet set;
  set.max_tokens = max_tokens;
  set.block_size = block_size;
  for (const auto& doc : docs) {
    TokenizedDocument tdoc = tokenize(doc, vocab, k_max);
    if (tdoc.token_ids.empty()) {
      spdlog::warn("{}: no tokens; skipped for training", doc.id);
      continue;
    }
    const std::size_t d = set.docs.size();
    set.samples.push_back(split_samples(tdoc, max_tokens, block_size));
    set.gold.push_back(gold_keys(tdoc));
    for (std::size_t s = 0; s < set.samples.back().size(); ++s) set.items.push_back({d, s});
    set.docs.push_back(std::move(tdoc));
  }
  return set;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptimizerState& state, std::size_t epochs_done) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) Throw(ErrorKind::kLoad, "cannot write checkpoint " + tmp.string());
    write_model(out, params);
    out.write(kOptMagic, sizeof(kOptMagic));
    write_u64(out, state.step);
    write_u64(out, epochs_done);
    for (const ModelParams* p : {&state.m, &state.v}) {
      for (const auto& t : p->tensors()) {
        for (double v : t.values()) write_f64(out, v);
      }
    }
    if (!out) Throw(ErrorKind::kLoad, "failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kLoad, "cannot open checkpoint " + path.string());
  Checkpoint ck;
  ck.params = read_model(in, path.string());
  char magic[sizeof(kOptMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || !std::equal(magic, magic + sizeof(magic), kOptMagic)) {
    Throw(ErrorKind::kLoad, path.string() + ": missing optimizer state section");
  }
  ck.state = OptimizerState::zeros_like(ck.params);
  ck.state.step = read_u64(in);
  ck.epochs_done = read_u64(in);
  for (ModelParams* p : {&ck.state.m, &ck.state.v}) {
    for (auto& t : p->tensors()) {
      for (double& v : t.values()) v = read_f64(in);
    }
  }
  return ck;
}

TrainResult train(const TrainingSet& data, ModelParams& params, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  params.validate();
  bool any_gold = false;
  for (std::size_t d = 0; d < data.docs.size() && !any_gold; ++d) {
    any_gold = !data.docs[d].gold_label_spans.empty();
  }
  if (data.items.empty() || !any_gold) {
    Throw(ErrorKind::kArgument, "training needs at least one sample with a gold keyphrase");
  }
  TrainResult result;
  OptimizerState opt = OptimizerState::zeros_like(params);
  const std::size_t total = cfg.epochs * data.items.size();
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(data.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, 10'000 + epoch));
    shuffle(order, rng);

    EpochLog ep;
    ep.epoch = epoch;
    for (std::size_t idx : order) {
      const auto& item = data.items[idx];
      const auto& tdoc = data.docs[item.doc];
      const auto& sample = data.samples[item.doc][item.sample];
      const ForwardState state = forward_sample(params, tdoc, sample, item.sample, hooks.store);
      const SampleLoss sl = sample_loss(state, data.gold[item.doc], sample.gold_label_spans,
                                        cfg.neg_sample_cap, derive_seed(cfg.seed, 1'000'000 + step));
      if (!std::isfinite(sl.breakdown.loss_kpe)) {
        Throw(ErrorKind::kNumeric, "loss diverged at step " + std::to_string(step));
      }
      ModelParams grads = backward(params, state, sample, sl.grads);
      const double lr = lr_at(step + 1, total, cfg);
      optimizer_step(params, std::move(grads), opt, lr, cfg);

      StepLog log{epoch, step, sl.breakdown, lr};
      if (hooks.loss_log) {
        *hooks.loss_log << epoch << ',' << step << ',' << log.loss.loss_rank << ','
                        << log.loss.loss_chunk << ',' << log.loss.loss_kpe << ',' << lr << '\n';
      }
      ep.mean_rank += log.loss.loss_rank;
      ep.mean_chunk += log.loss.loss_chunk;
      ep.mean_kpe += log.loss.loss_kpe;
      ++ep.steps;
      result.steps.push_back(log);
      ++step;
    }
    const double n = static_cast<double>(ep.steps);
    ep.mean_rank /= n;
    ep.mean_chunk /= n;
    ep.mean_kpe /= n;
    result.epochs.push_back(ep);
    if (!hooks.checkpoint.empty()) save_checkpoint(hooks.checkpoint, params, opt, epoch + 1);
    if (hooks.on_epoch) hooks.on_epoch(ep);
  }
  return result;
}

GradCheckReport grad_check(const ModelParams& params, const TokenizedDocument& tdoc,
                           const SampleSequence& sample, const GradCheckOptions& opts,
                           const PrecomputedStore* store) {
  const PhraseKeySet gold = gold_keys(tdoc);
  const ForwardState state = forward_sample(params, tdoc, sample, 0, store);
  const SampleLoss sl = sample_loss(state, gold, sample.gold_label_spans, opts.neg_sample_cap,
                                    opts.seed);
  ModelParams analytic = backward(params, state, sample, sl.grads);
  if (opts.corrupt) opts.corrupt(analytic);
  const std::uint64_t base_sig = evaluate(params, tdoc, sample, gold, opts, store).signature;

  GradCheckReport report;
  ModelParams probe = params;
  auto probe_t = probe.tensors();
  const auto analytic_t = analytic.tensors();
  for (std::size_t k = 0; k < probe_t.size(); ++k) {
    if (!probe_t[k].trainable) continue;
    double tensor_max = 0.0;
    for (std::size_t i = 0; i < probe_t[k].size(); ++i) {
      double& v = probe_t[k].data[i];
      const double saved = v;
      v = saved + opts.eps;
      const Evaluation plus = evaluate(probe, tdoc, sample, gold, opts, store);
      v = saved - opts.eps;
      const Evaluation minus = evaluate(probe, tdoc, sample, gold, opts, store);
      v = saved;
      if (plus.signature != base_sig || minus.signature != base_sig) {
        ++report.kink_excluded;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * opts.eps);
      const double a = analytic_t[k].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      tensor_max = std::max(tensor_max, rel);
      if (rel > report.max_rel_error || report.worst_tensor.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_tensor = probe_t[k].name;
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
    report.per_tensor.emplace_back(probe_t[k].name, tensor_max);
  }
  report.passed = report.checked > 0 && report.max_rel_error <= opts.tolerance;
  return report;
}

}  // namespace jointkpe

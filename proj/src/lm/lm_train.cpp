#include "wt/lm_train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "wt/errors.hpp"

namespace wt::lm {

SizePreset SizePreset::small() {
  SizePreset p;
  p.name = "small";
  p.hidden = 200;
  p.dropout = 0.0;
  p.init_scale = 0.1;
  p.learning_rate = 1.0;
  p.decay_start_epoch = 4;
  p.decay_factor = 0.5;
  p.epochs = 13;
  p.clip_norm = 5.0;
  p.batch_size = 20;
  p.seq_len = 20;
  return p;
}

SizePreset SizePreset::large() {
  SizePreset p;
  p.name = "large";
  p.hidden = 1500;
  p.dropout = 0.65;
  p.init_scale = 0.04;
  p.learning_rate = 1.0;
  p.decay_start_epoch = 14;
  p.decay_factor = 1.0 / 1.15;
  p.epochs = 55;
  p.clip_norm = 10.0;
  p.batch_size = 20;
  p.seq_len = 35;
  return p;
}

SizePreset SizePreset::by_name(const std::string& name) {
  if (name == "small") return small();
  if (name == "large") return large();
  throw ConfigError("preset", "expected 'small' or 'large', got '" + name + "'");
}

LmConfig make_config(const SizePreset& preset, std::size_t vocab_size, bool tied, bool projection) {
  LmConfig c;
  c.vocab_size = vocab_size;
  c.hidden = preset.hidden;
  c.num_layers = 2;
  c.tied = tied;
  c.projection = projection;
  c.dropout = preset.dropout;
  return c;
}

TrainConfig TrainConfig::from_preset(const SizePreset& preset, std::uint64_t seed) {
  TrainConfig t;
  t.batch_size = preset.batch_size;
  t.seq_len = preset.seq_len;
  t.epochs = preset.epochs;
  t.optimizer.kind = OptimizerKind::sgd;
  t.optimizer.learning_rate = preset.learning_rate;
  t.optimizer.decay_start_epoch = preset.decay_start_epoch;
  t.optimizer.decay_factor = preset.decay_factor;
  t.optimizer.clip_norm = preset.clip_norm;
  t.init_scale = preset.init_scale;
  t.seed = seed;
  return t;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size", "must be positive");
  if (seq_len == 0) throw ConfigError("seq_len", "must be positive");
  if (epochs == 0) throw ConfigError("epochs", "must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale", "must be > 0");
  optimizer.validate();
}

std::string format_metrics(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch=%zu\tlr=%.6g\ttrain_ppl=%.6f\tvalid_ppl=%.6f", r.epoch, r.learning_rate,
                r.train_ppl, r.valid_ppl);
  return buf;
}

std::string format_timing(const EpochRecord& r) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "epoch=%zu\twall_seconds=%.3f", r.epoch, r.wall_seconds);
  return buf;
}

std::vector<EpochRecord> train(LanguageModel& model, std::span<const TokenId> train_ids,
                               std::span<const TokenId> valid_ids, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
  config.validate();
  Rng rng(config.seed);
  if (config.initialize) model.init_uniform(rng, config.init_scale);

  const auto batches = batchify(train_ids, config.batch_size, config.seq_len);
  Optimizer optimizer(config.optimizer);
  std::vector<EpochRecord> records;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    optimizer.set_learning_rate(optimizer.learning_rate_for_epoch(static_cast<int>(epoch)));
    LstmState state = LstmState::zeros(model.config().num_layers, config.batch_size, model.hidden());

    double loss_sum = 0.0;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      auto fwd = forward(model, batches[i], state, &rng);
      if (!std::isfinite(fwd.cache.loss()))
        throw NumericError("lm train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(i + 1));
      loss_sum += fwd.cache.data_loss;
      LmParameters grads = backward(model, fwd.cache);
      auto params = model.params().list();
      auto grad_list = grads.list();
      optimizer.step(params, grad_list);
      state = std::move(fwd.final_state);
    }

    EpochRecord r;
    r.epoch = epoch;
    r.learning_rate = optimizer.learning_rate();
    r.train_ppl = std::exp(loss_sum / static_cast<double>(batches.size()));
    r.valid_ppl = valid_ids.size() >= 2 ? perplexity(model, valid_ids, config.eval_seq_len) : 0.0;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!std::isfinite(r.train_ppl) || !std::isfinite(r.valid_ppl))
      throw NumericError("lm train: non-finite perplexity at epoch " + std::to_string(epoch));
    records.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  return records;
}

}  // namespace wt::lm

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wt/language_model.hpp"
#include "wt/optimizer.hpp"

namespace wt::lm {

/// Named hyperparameter bundle for the small and large LSTM models.
struct SizePreset {
  std::string name;
  std::size_t hidden = 0;
  double dropout = 0.0;
  double init_scale = 0.1;
  double learning_rate = 1.0;
  int decay_start_epoch = 0;
  double decay_factor = 1.0;
  std::size_t epochs = 0;
  double clip_norm = 5.0;
  std::size_t batch_size = 20;
  std::size_t seq_len = 20;

  static SizePreset small();
  static SizePreset large();
  static SizePreset by_name(const std::string& name);
};

// Vocabulary size of the reference treebank setup.
inline constexpr std::size_t kReferenceVocab = 10000;

LmConfig make_config(const SizePreset& preset, std::size_t vocab_size, bool tied, bool projection);

struct TrainConfig {
  std::size_t batch_size = 20;
  std::size_t seq_len = 20;
  std::size_t epochs = 1;
  OptimizerConfig optimizer;
  double init_scale = 0.1;
  bool initialize = true;
  std::uint64_t seed = 1;
  std::size_t eval_seq_len = 35;

  static TrainConfig from_preset(const SizePreset& preset, std::uint64_t seed);
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_ppl = 0.0;  // running perplexity over the epoch's training batches
  double valid_ppl = 0.0;
  double wall_seconds = 0.0;
};

// One line of the metrics stream. Wall time is deliberately excluded so that
// reruns produce identical files; see format_timing.
std::string format_metrics(const EpochRecord& record);
std::string format_timing(const EpochRecord& record);

using EpochCallback = std::function<void(const EpochRecord&)>;

// SGD with global-norm clipping and the configured learning-rate decay. The
// hidden state is carried across consecutive batches and reset each epoch.
// Throws NumericError if the loss becomes non-finite.
std::vector<EpochRecord> train(LanguageModel& model, std::span<const TokenId> train_ids,
                               std::span<const TokenId> valid_ids, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

}  // namespace wt::lm

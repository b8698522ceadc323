#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wt/matrix.hpp"
#include "wt/numeric.hpp"
#include "wt/optimizer.hpp"
#include "wt/random.hpp"

namespace wt::nmt {

// none: W, U, V separate. decoder: U = V. three_way: W = U = V over one
// (union) vocabulary.
enum class Tying { none, decoder, three_way };

std::string to_string(Tying tying);
// Accepts "none", "decoder" (or "decoder-wt") and "twwt".
Tying parse_tying(const std::string& name);

struct NmtConfig {
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::size_t embed = 0;   // E: all embedding rows and the readout G
  std::size_t hidden = 0;  // recurrent width; annotations are 2*hidden
  Tying tying = Tying::none;
  // Doubles as the start symbol fed to the first decoder step.
  TokenId eos = 0;

  void validate() const;
};

/// Gated recurrent unit. Blocks along the 3H axis are (update, reset,
/// candidate); the candidate sees the reset-gated previous state.
struct GruWeights {
  Matrix w_input;   // in x 3H
  Matrix w_hidden;  // H x 3H
  Matrix bias;      // 1 x 3H
};

/// Every trainable matrix. Aliased roles keep only their owner: with decoder
/// tying `output_embedding` is empty, with three-way tying both
/// `target_embedding` and `output_embedding` are.
struct NmtParameters {
  Matrix source_embedding;  // W
  Matrix target_embedding;  // U
  Matrix output_embedding;  // V
  GruWeights encoder_forward;
  GruWeights encoder_backward;
  Matrix init_w;  // 2H x H
  Matrix init_b;  // 1 x H
  Matrix att_w;   // H x H, applied to the decoder state
  Matrix att_u;   // 2H x H, applied to annotations
  Matrix att_b;   // 1 x H
  Matrix att_v;   // H x 1
  GruWeights decoder;  // input is [U y_prev ; c_t]
  Matrix readout_w;    // (H + 2H + E) x E over [s_t ; c_t ; U y_prev]
  Matrix readout_b;    // 1 x E

  NmtParameters zeros_like() const;
  std::vector<std::pair<std::string, Matrix*>> named();
  std::vector<std::pair<std::string, const Matrix*>> named() const;
  std::vector<Matrix*> list();
  std::size_t count() const;
};

class NmtModel {
 public:
  explicit NmtModel(NmtConfig config);

  const NmtConfig& config() const noexcept { return config_; }
  Tying tying() const noexcept { return config_.tying; }

  NmtParameters& params() noexcept { return params_; }
  const NmtParameters& params() const noexcept { return params_; }

  const Matrix& source_embedding() const noexcept { return params_.source_embedding; }
  const Matrix& target_embedding() const noexcept;
  const Matrix& output_embedding() const noexcept;

  void init_uniform(Rng& rng, double scale);

  // Untied copy whose W, U and V hold the values of the tied roles.
  NmtModel untied_clone() const;

  std::size_t param_count() const { return params_.count(); }

 private:
  NmtConfig config_;
  NmtParameters params_;
};

// Exact number of stored parameters; aliased roles counted once.
std::size_t param_count(const NmtConfig& config);

/// Bidirectional encoder output: annotation j is [forward_j ; backward_j].
struct Annotations {
  std::vector<std::vector<double>> h;
  std::size_t size() const noexcept { return h.size(); }
};

Annotations encode(const NmtModel& model, std::span<const TokenId> source);

struct Attention {
  std::vector<double> context;  // c_t, length 2H
  std::vector<double> weights;  // a_t, one per annotation
};

// Additive scorer e_j = v . tanh(W s + U h_j + b); a = softmax(e).
Attention attend(const NmtModel& model, std::span<const double> state, const Annotations& annotations);

// tanh(init_w^T mean(h) + init_b)
std::vector<double> initial_state(const NmtModel& model, const Annotations& annotations);

struct StepOutput {
  std::vector<double> logits;  // V G
  std::vector<double> state;   // s_t
};

StepOutput decode_step(const NmtModel& model, TokenId prev, std::span<const double> state,
                       std::span<const double> context);

// Argmax decoding (ties go to the lowest id) until eos or max_len tokens.
// The eos is not included in the output.
std::vector<TokenId> translate_greedy(const NmtModel& model, std::span<const TokenId> source,
                                      std::size_t max_len);

/// One training example. The target excludes the final eos, which is appended
/// internally.
struct SentencePair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
};

// Mean cross entropy per target token (eos included), teacher forced.
double pair_loss(const NmtModel& model, const SentencePair& pair);

// Adds scale * d(summed token loss)/d(theta) into grads (same layout as the
// model's parameters) and returns the summed token loss.
double accumulate_gradients(const NmtModel& model, const SentencePair& pair, NmtParameters& grads,
                            double scale);

// Gradient of pair_loss.
NmtParameters gradients(const NmtModel& model, const SentencePair& pair);

// Gradient of the storage shared by the tied roles (U=V for decoder tying,
// W=U=V for three-way tying).
Matrix tied_gradient(const NmtModel& model, const SentencePair& pair);

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;  // sentence pairs per update
  OptimizerConfig optimizer{OptimizerKind::adadelta, 1.0, 0, 1.0, 1.0};
  double init_scale = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;  // mean per-token cross entropy over the epoch
  double wall_seconds = 0.0;
};

std::string format_metrics(const EpochRecord& record);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch training with per-epoch shuffling. Throws NumericError on a
// non-finite loss.
std::vector<EpochRecord> train(NmtModel& model, std::span<const SentencePair> pairs, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

// Fraction of reference positions reproduced exactly by greedy decoding; a
// length mismatch counts every missing or extra position as an error.
double token_accuracy(const NmtModel& model, std::span<const SentencePair> pairs, std::size_t max_len);

}  // namespace wt::nmt

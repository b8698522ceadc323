#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wt/corpus.hpp"
#include "wt/embedding.hpp"
#include "wt/matrix.hpp"
#include "wt/numeric.hpp"
#include "wt/random.hpp"

namespace wt::lm {

// Penalty weight on ||P||_F used for every projection-regularized model.
inline constexpr double kProjectionLambda = 0.15;

struct LmConfig {
  std::size_t vocab_size = 0;
  // LSTM width; embeddings are vocab_size x hidden.
  std::size_t hidden = 0;
  std::size_t num_layers = 2;
  bool tied = false;
  bool projection = false;
  double lambda = kProjectionLambda;
  double dropout = 0.0;

  void validate() const;
};

/// One LSTM layer. Gate blocks are laid out as (i, f, g, o) along the 4H axis.
/// There are two bias vectors, one on the input path and one on the recurrent
/// path.
struct LstmWeights {
  Matrix w_input;   // in x 4H
  Matrix w_hidden;  // H x 4H
  Matrix b_input;   // 1 x 4H
  Matrix b_hidden;  // 1 x 4H
};

/// Every trainable matrix of the language model. The same structure holds the
/// gradients. When tied, `embedding` is the shared matrix S and `output` is
/// empty; `projection` is empty unless projection regularization is on.
struct LmParameters {
  Matrix embedding;
  Matrix output;
  std::vector<LstmWeights> layers;
  Matrix projection;

  LmParameters zeros_like() const;
  std::vector<std::pair<std::string, Matrix*>> named();
  std::vector<std::pair<std::string, const Matrix*>> named() const;
  std::vector<Matrix*> list();
  std::size_t count() const;
};

/// Recurrent state of all layers, each batch x H.
struct LstmState {
  std::vector<Matrix> h;
  std::vector<Matrix> c;

  static LstmState zeros(std::size_t num_layers, std::size_t batch, std::size_t hidden);
};

class LanguageModel {
 public:
  explicit LanguageModel(LmConfig config);

  const LmConfig& config() const noexcept { return config_; }
  std::size_t vocab_size() const noexcept { return config_.vocab_size; }
  std::size_t hidden() const noexcept { return config_.hidden; }
  bool tied() const noexcept { return config_.tied; }
  bool has_projection() const noexcept { return config_.projection; }

  // Mutable access invalidates outstanding forward caches.
  LmParameters& params() noexcept {
    ++version_;
    return params_;
  }
  const LmParameters& params() const noexcept { return params_; }
  std::uint64_t version() const noexcept { return version_; }

  const Matrix& input_embedding() const noexcept { return params_.embedding; }
  const Matrix& output_embedding() const noexcept { return tied() ? params_.embedding : params_.output; }
  const Matrix* projection() const noexcept { return has_projection() ? &params_.projection : nullptr; }

  // Uniform(-scale, scale) for every parameter except the forget-gate biases,
  // which start at zero. A projection, when present, is initialized to the
  // identity plus the same noise.
  void init_uniform(Rng& rng, double scale);

  // Untied copy with U = V = S, keeping all other parameters.
  LanguageModel untied_clone() const;

  std::size_t param_count() const { return params_.count(); }

 private:
  LmConfig config_;
  LmParameters params_;
  std::uint64_t version_ = 0;
};

// Exact number of parameters of the configuration; tied storage counted once.
std::size_t param_count(const LmConfig& config);

/// Everything forward() keeps for backward().
struct ForwardCache {
  const LanguageModel* model = nullptr;
  std::uint64_t model_version = 0;
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;

  // [t][layer]
  std::vector<std::vector<Matrix>> layer_inputs;  // post-dropout input to each layer
  std::vector<std::vector<Matrix>> gates;         // activated (i, f, g, o)
  std::vector<std::vector<Matrix>> cells;
  std::vector<std::vector<Matrix>> cell_tanh;
  std::vector<std::vector<Matrix>> hiddens;
  std::vector<std::vector<Matrix>> input_masks;   // empty when dropout is off
  LstmState initial;

  Matrix top;        // (steps*batch) x H, post-dropout h2, row t*batch+b
  Matrix top_mask;   // same shape; empty when dropout is off
  Matrix projected;  // P h2 rows; empty without projection
  Matrix logits;     // (steps*batch) x C
  Matrix probs;      // softmax of logits

  double data_loss = 0.0;  // mean cross entropy over positions
  double penalty = 0.0;    // lambda * ||P||_F
  double loss() const noexcept { return data_loss + penalty; }

  std::span<const double> logits_at(std::size_t b, std::size_t t) const {
    return logits.row(t * batch + b);
  }
  std::span<const double> probs_at(std::size_t b, std::size_t t) const {
    return probs.row(t * batch + b);
  }
};

struct ForwardResult {
  ForwardCache cache;
  LstmState final_state;
};

// Runs the batch from `initial`. Dropout masks are drawn from `dropout_rng`
// when it is non-null and the model's dropout is positive.
ForwardResult forward(const LanguageModel& model, const BpttBatch& batch, const LstmState& initial,
                      Rng* dropout_rng = nullptr);

// Gradients of cache.loss() with respect to every parameter (truncated at the
// batch boundary). For a tied model the shared gradient is accumulated in
// `embedding`. Throws std::logic_error if the model changed since forward.
LmParameters backward(const LanguageModel& model, const ForwardCache& cache);

// Input-role row gradient for the word fed at one step:
// (sum_x p_x V_x - V_target) * dh2/dU_input, with dh2_du given as H x H
// (dh2_du(i, j) = d h2_i / d u_j).
std::vector<double> embedding_grad_input(const ProbVector& p, const Matrix& output_embedding,
                                         TokenId target, const Matrix& dh2_du);

// Output-role gradient of one step: row target gets (p_target - 1) h2, every
// other row k gets p_k h2.
Matrix embedding_grad_output(const ProbVector& p, std::span<const double> h2, TokenId target);

// Gradient of the shared matrix of a tied model on one batch.
Matrix tied_gradient(const LanguageModel& model, const BpttBatch& batch, const LstmState& initial);

// exp(mean -log p(target)) over every position of the stream, evaluated as a
// single lane in windows of seq_len with state carried across windows.
double perplexity(const LanguageModel& model, std::span<const TokenId> ids, std::size_t seq_len = 35);

Embedding export_embedding(const LanguageModel& model, const Vocabulary& vocab, EmbeddingRole role);

}  // namespace wt::lm

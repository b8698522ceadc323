#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wt/embedding.hpp"
#include "wt/matrix.hpp"
#include "wt/numeric.hpp"
#include "wt/random.hpp"
#include "wt/vocabulary.hpp"

namespace wt::skipgram {

enum class Objective { full_softmax, negative_sampling };

std::string to_string(Objective objective);
Objective parse_objective(const std::string& name);

/// Input embedding U and output embedding V, both C x H. A tied model keeps a
/// single matrix S that answers for both roles.
class SkipGramModel {
 public:
  SkipGramModel(std::size_t vocab_size, std::size_t dim, bool tied);

  void init_uniform(Rng& rng, double scale);

  std::size_t vocab_size() const noexcept { return input_.rows(); }
  std::size_t dim() const noexcept { return input_.cols(); }
  bool tied() const noexcept { return tied_; }

  Matrix& input_embedding() noexcept { return input_; }
  const Matrix& input_embedding() const noexcept { return input_; }
  Matrix& output_embedding() noexcept { return tied_ ? input_ : output_; }
  const Matrix& output_embedding() const noexcept { return tied_ ? input_ : output_; }

  // Untied copy with U = V = S (for a tied model) or an identical copy.
  SkipGramModel untied_clone() const;

  std::size_t param_count() const noexcept { return input_.size() + output_.size(); }

 private:
  Matrix input_;
  Matrix output_;  // empty when tied
  bool tied_;
};

/// Gradients of one training pair. For a tied model only `shared` is set.
struct Gradients {
  Matrix input;
  Matrix output;
  Matrix shared;
};

// (id[t], id[t+j]) for every 0<|j|<=window inside the stream, ordered by t then j.
std::vector<std::pair<TokenId, TokenId>> pairs(std::span<const TokenId> ids, std::size_t window);

// -log softmax(V u_center)[context]
double full_softmax_loss(const SkipGramModel& model, TokenId center, TokenId context);
Gradients full_softmax_gradients(const SkipGramModel& model, TokenId center, TokenId context);
// One SGD step on the pair; returns the pre-update loss.
double step_full_softmax(SkipGramModel& model, TokenId center, TokenId context, double lr);

// -log sigma(v_context . u) - sum_n log sigma(-v_n . u)
double sgns_loss(const SkipGramModel& model, TokenId center, TokenId context,
                 std::span<const TokenId> negatives);
Gradients sgns_gradients(const SkipGramModel& model, TokenId center, TokenId context,
                         std::span<const TokenId> negatives);
double step_negative_sampling(SkipGramModel& model, TokenId center, TokenId context,
                              std::span<const TokenId> negatives, double lr);

/// Draws negatives from the unigram distribution raised to `exponent`.
class NegativeSampler {
 public:
  NegativeSampler(std::span<const std::uint64_t> counts, double exponent);

  TokenId sample(Rng& rng) const;
  // k samples, none equal to `exclude`.
  std::vector<TokenId> sample(Rng& rng, std::size_t k, TokenId exclude) const;

  double probability(TokenId id) const;

 private:
  std::vector<double> cumulative_;
};

struct TrainConfig {
  std::size_t window = 5;
  Objective objective = Objective::negative_sampling;
  std::size_t negatives = 5;
  double noise_exponent = 0.75;
  double learning_rate = 0.025;
  // Linear decay to learning_rate * min_lr_fraction over the whole run.
  double min_lr_fraction = 1e-4;
  std::size_t epochs = 1;
  // Frequent-word subsampling threshold; 0 disables.
  double subsample = 0.0;
  std::uint64_t seed = 1;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  std::size_t pairs = 0;
};

std::vector<EpochMetrics> train(SkipGramModel& model, std::span<const TokenId> ids,
                                const Vocabulary& vocab, const TrainConfig& config);

// Table for the requested role. `tied` requires a tied model; a tied model
// answers `input` and `output` with its shared matrix.
Embedding export_embedding(const SkipGramModel& model, const Vocabulary& vocab, EmbeddingRole role);

}  // namespace wt::skipgram

#include "wt/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wt/errors.hpp"

namespace wt::skipgram {

std::string to_string(Objective objective) {
  return objective == Objective::full_softmax ? "full-softmax" : "negative-sampling";
}

Objective parse_objective(const std::string& name) {
  if (name == "full-softmax") return Objective::full_softmax;
  if (name == "negative-sampling") return Objective::negative_sampling;
  throw ConfigError("objective", "expected 'full-softmax' or 'negative-sampling', got '" + name + "'");
}

SkipGramModel::SkipGramModel(std::size_t vocab_size, std::size_t dim, bool tied)
    : input_(vocab_size, dim), output_(tied ? 0 : vocab_size, tied ? 0 : dim), tied_(tied) {
  if (vocab_size == 0 || dim == 0) throw ArgumentError("skip-gram: vocabulary and dimension must be positive");
}

void SkipGramModel::init_uniform(Rng& rng, double scale) {
  fill_uniform(input_, rng, scale);
  if (!tied_) fill_uniform(output_, rng, scale);
}

SkipGramModel SkipGramModel::untied_clone() const {
  SkipGramModel clone(vocab_size(), dim(), false);
  clone.input_ = input_;
  clone.output_ = tied_ ? input_ : output_;
  return clone;
}

std::vector<std::pair<TokenId, TokenId>> pairs(std::span<const TokenId> ids, std::size_t window) {
  if (window == 0) throw ArgumentError("skip-gram: window must be >= 1");
  std::vector<std::pair<TokenId, TokenId>> out;
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  const auto w = static_cast<std::ptrdiff_t>(window);
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    for (std::ptrdiff_t j = -w; j <= w; ++j) {
      if (j == 0 || t + j < 0 || t + j >= n) continue;
      out.emplace_back(ids[t], ids[t + j]);
    }
  }
  return out;
}

namespace {

void check_id(const SkipGramModel& model, TokenId id) {
  if (id >= model.vocab_size()) throw ArgumentError("skip-gram: token id out of range");
}

// softmax(V u) - onehot(context)
std::vector<double> output_error(const SkipGramModel& model, std::span<const double> u, TokenId context) {
  const Matrix& v = model.output_embedding();
  std::vector<double> logits(v.rows());
  for (std::size_t k = 0; k < v.rows(); ++k) logits[k] = dot(v.row(k), u);
  return softmax_xent_grad(logits, context);
}

}  // namespace

double full_softmax_loss(const SkipGramModel& model, TokenId center, TokenId context) {
  check_id(model, center);
  check_id(model, context);
  const Matrix& v = model.output_embedding();
  const auto u = model.input_embedding().row(center);
  std::vector<double> logits(v.rows());
  for (std::size_t k = 0; k < v.rows(); ++k) logits[k] = dot(v.row(k), u);
  return xent_loss(softmax(logits), context);
}

Gradients full_softmax_gradients(const SkipGramModel& model, TokenId center, TokenId context) {
  check_id(model, center);
  check_id(model, context);
  const Matrix& v = model.output_embedding();
  const std::vector<double> u(model.input_embedding().row(center).begin(),
                              model.input_embedding().row(center).end());
  const auto err = output_error(model, u, context);

  Gradients g;
  Matrix& out_grad = model.tied() ? g.shared : g.output;
  out_grad = Matrix(v.rows(), v.cols());
  for (std::size_t k = 0; k < v.rows(); ++k) axpy(out_grad.row(k), err[k], u);

  std::vector<double> in_row(model.dim(), 0.0);
  for (std::size_t k = 0; k < v.rows(); ++k) axpy(in_row, err[k], v.row(k));
  if (model.tied()) {
    axpy(g.shared.row(center), 1.0, in_row);
  } else {
    g.input = Matrix(model.vocab_size(), model.dim());
    axpy(g.input.row(center), 1.0, in_row);
  }
  return g;
}

double step_full_softmax(SkipGramModel& model, TokenId center, TokenId context, double lr) {
  check_id(model, center);
  check_id(model, context);
  Matrix& v = model.output_embedding();
  const std::vector<double> u(model.input_embedding().row(center).begin(),
                              model.input_embedding().row(center).end());
  const auto err = output_error(model, u, context);
  const double loss = -std::log(std::max(err[context] + 1.0, kProbabilityFloor));

  std::vector<double> in_row(model.dim(), 0.0);
  for (std::size_t k = 0; k < v.rows(); ++k) axpy(in_row, err[k], v.row(k));
  for (std::size_t k = 0; k < v.rows(); ++k) axpy(v.row(k), -lr * err[k], u);
  axpy(model.input_embedding().row(center), -lr, in_row);
  return loss;
}

namespace {

struct SgnsTerm {
  TokenId id;
  double label;
};

std::vector<SgnsTerm> sgns_terms(TokenId context, std::span<const TokenId> negatives) {
  std::vector<SgnsTerm> terms{{context, 1.0}};
  for (TokenId n : negatives) terms.push_back({n, 0.0});
  return terms;
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

double sgns_loss(const SkipGramModel& model, TokenId center, TokenId context,
                 std::span<const TokenId> negatives) {
  check_id(model, center);
  const auto u = model.input_embedding().row(center);
  double loss = 0.0;
  for (const auto& term : sgns_terms(context, negatives)) {
    check_id(model, term.id);
    const double score = dot(model.output_embedding().row(term.id), u);
    loss -= term.label > 0.5 ? log_sigmoid(score) : log_sigmoid(-score);
  }
  return loss;
}

Gradients sgns_gradients(const SkipGramModel& model, TokenId center, TokenId context,
                         std::span<const TokenId> negatives) {
  check_id(model, center);
  const std::vector<double> u(model.input_embedding().row(center).begin(),
                              model.input_embedding().row(center).end());
  Gradients g;
  Matrix& out_grad = model.tied() ? g.shared : g.output;
  out_grad = Matrix(model.vocab_size(), model.dim());
  std::vector<double> in_row(model.dim(), 0.0);
  for (const auto& term : sgns_terms(context, negatives)) {
    check_id(model, term.id);
    const auto v = model.output_embedding().row(term.id);
    const double e = sigmoid(dot(v, u)) - term.label;
    axpy(in_row, e, v);
    axpy(out_grad.row(term.id), e, u);
  }
  if (model.tied()) {
    axpy(g.shared.row(center), 1.0, in_row);
  } else {
    g.input = Matrix(model.vocab_size(), model.dim());
    axpy(g.input.row(center), 1.0, in_row);
  }
  return g;
}

double step_negative_sampling(SkipGramModel& model, TokenId center, TokenId context,
                              std::span<const TokenId> negatives, double lr) {
  check_id(model, center);
  const std::vector<double> u(model.input_embedding().row(center).begin(),
                              model.input_embedding().row(center).end());
  const auto terms = sgns_terms(context, negatives);
  // All contributions are evaluated at the pre-update parameters.
  std::vector<double> errs;
  errs.reserve(terms.size());
  std::vector<double> in_row(model.dim(), 0.0);
  double loss = 0.0;
  for (const auto& term : terms) {
    check_id(model, term.id);
    const auto v = model.output_embedding().row(term.id);
    const double score = dot(v, u);
    loss -= term.label > 0.5 ? log_sigmoid(score) : log_sigmoid(-score);
    const double e = sigmoid(score) - term.label;
    errs.push_back(e);
    axpy(in_row, e, v);
  }
  for (std::size_t i = 0; i < terms.size(); ++i)
    axpy(model.output_embedding().row(terms[i].id), -lr * errs[i], u);
  axpy(model.input_embedding().row(center), -lr, in_row);
  return loss;
}

NegativeSampler::NegativeSampler(std::span<const std::uint64_t> counts, double exponent) {
  if (counts.empty()) throw ArgumentError("negative sampler: empty vocabulary");
  cumulative_.resize(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += std::pow(static_cast<double>(counts[i]), exponent);
    cumulative_[i] = total;
  }
  if (!(total > 0.0)) throw ArgumentError("negative sampler: all counts are zero");
  for (double& c : cumulative_) c /= total;
}

TokenId NegativeSampler::sample(Rng& rng) const {
  const double r = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  return static_cast<TokenId>(std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1));
}

std::vector<TokenId> NegativeSampler::sample(Rng& rng, std::size_t k, TokenId exclude) const {
  if (probability(exclude) >= 1.0 - 1e-12 && k > 0)
    throw ArgumentError("negative sampler: cannot exclude the only word with nonzero mass");
  std::vector<TokenId> out;
  out.reserve(k);
  while (out.size() < k) {
    const TokenId id = sample(rng);
    if (id != exclude) out.push_back(id);
  }
  return out;
}

double NegativeSampler::probability(TokenId id) const {
  if (id >= cumulative_.size()) return 0.0;
  return cumulative_[id] - (id == 0 ? 0.0 : cumulative_[id - 1]);
}

std::vector<EpochMetrics> train(SkipGramModel& model, std::span<const TokenId> ids,
                                const Vocabulary& vocab, const TrainConfig& config) {
  if (vocab.size() != model.vocab_size()) throw ArgumentError("skip-gram train: vocabulary size mismatch");
  if (config.epochs == 0) throw ConfigError("epochs", "must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");

  Rng rng(config.seed);
  const NegativeSampler sampler(vocab.counts(), config.noise_exponent);

  std::uint64_t total_count = 0;
  for (auto c : vocab.counts()) total_count += c;

  std::vector<EpochMetrics> metrics;
  std::size_t done = 0;
  const std::size_t estimated_total = ids.size() * 2 * config.window * config.epochs;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<TokenId> kept;
    kept.reserve(ids.size());
    for (TokenId id : ids) {
      if (config.subsample > 0.0 && total_count > 0) {
        const double f = static_cast<double>(vocab.count(id)) / static_cast<double>(total_count);
        const double keep = f > 0.0 ? std::sqrt(config.subsample / f) + config.subsample / f : 1.0;
        if (keep < 1.0 && !rng.bernoulli(keep)) continue;
      }
      kept.push_back(id);
    }
    const auto epoch_pairs = pairs(kept, config.window);

    EpochMetrics m;
    m.epoch = epoch;
    double loss_sum = 0.0;
    double lr = config.learning_rate;
    for (const auto& [center, context] : epoch_pairs) {
      const double progress = std::min(1.0, static_cast<double>(done) / static_cast<double>(std::max<std::size_t>(estimated_total, 1)));
      lr = config.learning_rate * std::max(config.min_lr_fraction, 1.0 - progress);
      if (config.objective == Objective::full_softmax) {
        loss_sum += step_full_softmax(model, center, context, lr);
      } else {
        const auto negs = sampler.sample(rng, config.negatives, context);
        loss_sum += step_negative_sampling(model, center, context, negs, lr);
      }
      ++done;
    }
    m.learning_rate = lr;
    m.pairs = epoch_pairs.size();
    m.mean_loss = epoch_pairs.empty() ? 0.0 : loss_sum / static_cast<double>(epoch_pairs.size());
    if (!std::isfinite(m.mean_loss)) throw NumericError("skip-gram train: non-finite loss in epoch " + std::to_string(epoch));
    metrics.push_back(m);
  }
  return metrics;
}

Embedding export_embedding(const SkipGramModel& model, const Vocabulary& vocab, EmbeddingRole role) {
  if (vocab.size() != model.vocab_size()) throw ArgumentError("export: vocabulary size mismatch");
  if (role == EmbeddingRole::tied && !model.tied()) throw ArgumentError("export: 'tied' role requires a tied model");
  const Matrix& m = role == EmbeddingRole::output ? model.output_embedding() : model.input_embedding();
  return Embedding(vocab.tokens(), m);
}

}  // namespace wt::skipgram

#include "wt/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wt/errors.hpp"

namespace wt::lm {

void LmConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size", "must be >= 2");
  if (hidden == 0) throw ConfigError("hidden", "must be positive");
  if (num_layers == 0) throw ConfigError("layers", "must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout", "must be in [0, 1)");
  if (projection && !(lambda >= 0.0)) throw ConfigError("lambda", "must be >= 0");
}

// ---------------------------------------------------------------------------
// Parameters

LmParameters LmParameters::zeros_like() const {
  LmParameters z;
  z.embedding = Matrix(embedding.rows(), embedding.cols());
  z.output = Matrix(output.rows(), output.cols());
  for (const auto& l : layers) {
    z.layers.push_back({Matrix(l.w_input.rows(), l.w_input.cols()), Matrix(l.w_hidden.rows(), l.w_hidden.cols()),
                        Matrix(l.b_input.rows(), l.b_input.cols()), Matrix(l.b_hidden.rows(), l.b_hidden.cols())});
  }
  z.projection = Matrix(projection.rows(), projection.cols());
  return z;
}

std::vector<std::pair<std::string, Matrix*>> LmParameters::named() {
  std::vector<std::pair<std::string, Matrix*>> out;
  out.emplace_back(output.empty() ? "shared_embedding" : "input_embedding", &embedding);
  if (!output.empty()) out.emplace_back("output_embedding", &output);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l + 1) + ".";
    out.emplace_back(p + "w_input", &layers[l].w_input);
    out.emplace_back(p + "w_hidden", &layers[l].w_hidden);
    out.emplace_back(p + "b_input", &layers[l].b_input);
    out.emplace_back(p + "b_hidden", &layers[l].b_hidden);
  }
  if (!projection.empty()) out.emplace_back("projection", &projection);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> LmParameters::named() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<LmParameters*>(this)->named()) out.emplace_back(name, m);
  return out;
}

std::vector<Matrix*> LmParameters::list() {
  std::vector<Matrix*> out;
  for (auto& [name, m] : named()) out.push_back(m);
  return out;
}

std::size_t LmParameters::count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : named()) n += m->size();
  return n;
}

LstmState LstmState::zeros(std::size_t num_layers, std::size_t batch, std::size_t hidden) {
  LstmState s;
  s.h.assign(num_layers, Matrix(batch, hidden));
  s.c.assign(num_layers, Matrix(batch, hidden));
  return s;
}

// ---------------------------------------------------------------------------
// Model

LanguageModel::LanguageModel(LmConfig config) : config_(config) {
  config_.validate();
  const std::size_t c = config_.vocab_size;
  const std::size_t h = config_.hidden;
  params_.embedding = Matrix(c, h);
  if (!config_.tied) params_.output = Matrix(c, h);
  for (std::size_t l = 0; l < config_.num_layers; ++l)
    params_.layers.push_back({Matrix(h, 4 * h), Matrix(h, 4 * h), Matrix(1, 4 * h), Matrix(1, 4 * h)});
  if (config_.projection) params_.projection = Matrix::identity(h);
}

void LanguageModel::init_uniform(Rng& rng, double scale) {
  for (auto& [name, m] : params().named()) fill_uniform(*m, rng, scale);
  const std::size_t h = config_.hidden;
  for (auto& layer : params_.layers) {
    for (std::size_t j = h; j < 2 * h; ++j) {
      layer.b_input(0, j) = 0.0;
      layer.b_hidden(0, j) = 0.0;
    }
  }
  if (config_.projection) {
    for (std::size_t i = 0; i < config_.hidden; ++i) params_.projection(i, i) += 1.0;
  }
}

LanguageModel LanguageModel::untied_clone() const {
  LmConfig cfg = config_;
  cfg.tied = false;
  LanguageModel clone(cfg);
  LmParameters& p = clone.params();
  p.embedding = params_.embedding;
  p.output = tied() ? params_.embedding : params_.output;
  p.layers = params_.layers;
  p.projection = params_.projection;
  return clone;
}

std::size_t param_count(const LmConfig& config) {
  const std::size_t c = config.vocab_size;
  const std::size_t h = config.hidden;
  std::size_t n = (config.tied ? 1 : 2) * c * h;
  // input path, recurrent path, two bias vectors
  n += config.num_layers * (h * 4 * h + h * 4 * h + 2 * 4 * h);
  if (config.projection) n += h * h;
  return n;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

Matrix dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep = 1.0 - p;
  const double scale = 1.0 / keep;
  for (double& v : mask.values()) v = rng.uniform() < keep ? scale : 0.0;
  return mask;
}

void hadamard_in_place(Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
}

void add_row_broadcast(Matrix& m, const Matrix& row) {
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(m.row(r), 1.0, row.row(0));
}

void add_column_sums(Matrix& row, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(row.row(0), 1.0, m.row(r));
}

}  // namespace

ForwardResult forward(const LanguageModel& model, const BpttBatch& batch, const LstmState& initial,
                      Rng* dropout_rng) {
  const std::size_t B = batch.batch_size;
  const std::size_t T = batch.seq_len;
  const std::size_t H = model.hidden();
  const std::size_t C = model.vocab_size();
  const std::size_t L = model.config().num_layers;
  const LmParameters& p = model.params();

  if (batch.inputs.size() != B * T || batch.targets.size() != B * T)
    throw ShapeError("lm forward: batch layout does not match its dimensions");
  for (std::size_t i = 0; i < B * T; ++i) {
    if (batch.inputs[i] >= C || batch.targets[i] >= C)
      throw ArgumentError("lm forward: token id " + std::to_string(std::max(batch.inputs[i], batch.targets[i])) +
                          " out of range for vocabulary of " + std::to_string(C));
  }
  if (initial.h.size() != L || initial.c.size() != L) throw ShapeError("lm forward: state has wrong layer count");
  for (std::size_t l = 0; l < L; ++l) {
    if (initial.h[l].rows() != B || initial.h[l].cols() != H || !initial.c[l].same_shape(initial.h[l]))
      throw ShapeError("lm forward: state is not " + std::to_string(B) + "x" + std::to_string(H));
  }

  const bool dropout = dropout_rng != nullptr && model.config().dropout > 0.0;
  const double drop_p = model.config().dropout;

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.model = &model;
  cache.model_version = model.version();
  cache.batch = B;
  cache.steps = T;
  cache.inputs = batch.inputs;
  cache.targets = batch.targets;
  cache.initial = initial;
  cache.layer_inputs.assign(T, std::vector<Matrix>(L));
  cache.gates.assign(T, std::vector<Matrix>(L));
  cache.cells.assign(T, std::vector<Matrix>(L));
  cache.cell_tanh.assign(T, std::vector<Matrix>(L));
  cache.hiddens.assign(T, std::vector<Matrix>(L));
  if (dropout) cache.input_masks.assign(T, std::vector<Matrix>(L));
  cache.top = Matrix(T * B, H);
  if (dropout) cache.top_mask = Matrix(T * B, H);

  LstmState state = initial;
  for (std::size_t t = 0; t < T; ++t) {
    Matrix x(B, H);
    for (std::size_t b = 0; b < B; ++b) {
      const auto src = p.embedding.row(batch.input(b, t));
      std::copy(src.begin(), src.end(), x.row(b).begin());
    }
    for (std::size_t l = 0; l < L; ++l) {
      const LstmWeights& w = p.layers[l];
      if (dropout) {
        cache.input_masks[t][l] = dropout_mask(B, x.cols(), drop_p, *dropout_rng);
        hadamard_in_place(x, cache.input_masks[t][l]);
      }
      Matrix gates(B, 4 * H);
      add_matmul(gates, x, w.w_input);
      add_matmul(gates, state.h[l], w.w_hidden);
      add_row_broadcast(gates, w.b_input);
      add_row_broadcast(gates, w.b_hidden);

      Matrix c(B, H), tc(B, H), h(B, H);
      for (std::size_t b = 0; b < B; ++b) {
        auto g = gates.row(b);
        for (std::size_t j = 0; j < H; ++j) {
          g[j] = sigmoid(g[j]);                  // input gate
          g[H + j] = sigmoid(g[H + j]);          // forget gate
          g[2 * H + j] = std::tanh(g[2 * H + j]);  // candidate
          g[3 * H + j] = sigmoid(g[3 * H + j]);  // output gate
          c(b, j) = g[H + j] * state.c[l](b, j) + g[j] * g[2 * H + j];
          tc(b, j) = std::tanh(c(b, j));
          h(b, j) = g[3 * H + j] * tc(b, j);
        }
      }
      cache.layer_inputs[t][l] = std::move(x);
      cache.gates[t][l] = std::move(gates);
      cache.cells[t][l] = c;
      cache.cell_tanh[t][l] = std::move(tc);
      cache.hiddens[t][l] = h;
      state.h[l] = h;
      state.c[l] = std::move(c);
      x = std::move(h);
    }
    for (std::size_t b = 0; b < B; ++b) {
      auto dst = cache.top.row(t * B + b);
      const auto src = x.row(b);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  if (dropout) {
    cache.top_mask = dropout_mask(T * B, H, drop_p, *dropout_rng);
    hadamard_in_place(cache.top, cache.top_mask);
  }

  const Matrix& output = model.output_embedding();
  if (model.has_projection()) cache.projected = matmul_nt(cache.top, p.projection);
  const Matrix& z = model.has_projection() ? cache.projected : cache.top;
  cache.logits = matmul(z, output.transposed());
  cache.probs = cache.logits;
  softmax_rows(cache.probs);

  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b)
      total += xent_loss(cache.probs.row(t * B + b), batch.target(b, t));
  cache.data_loss = total / static_cast<double>(B * T);
  if (model.has_projection()) cache.penalty = model.config().lambda * frobenius_norm(p.projection);

  result.final_state = std::move(state);
  return result;
}

// ---------------------------------------------------------------------------
// Backward

LmParameters backward(const LanguageModel& model, const ForwardCache& cache) {
  if (cache.model != &model || cache.model_version != model.version())
    throw std::logic_error("lm backward: forward cache is stale (model changed since forward)");

  const std::size_t B = cache.batch;
  const std::size_t T = cache.steps;
  const std::size_t H = model.hidden();
  const std::size_t L = model.config().num_layers;
  const std::size_t N = B * T;
  const LmParameters& p = model.params();

  LmParameters grads = p.zeros_like();
  Matrix& d_output = model.tied() ? grads.embedding : grads.output;

  Matrix d_logits = cache.probs;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b) d_logits(t * B + b, cache.targets[b * T + t]) -= 1.0;
  d_logits *= 1.0 / static_cast<double>(N);

  const Matrix& z = model.has_projection() ? cache.projected : cache.top;
  add_matmul_tn(d_output, d_logits, z);
  Matrix d_top = matmul(d_logits, model.output_embedding());
  if (model.has_projection()) {
    const Matrix d_z = std::move(d_top);
    add_matmul_tn(grads.projection, d_z, cache.top);
    d_top = matmul(d_z, p.projection);
    const double norm = frobenius_norm(p.projection);
    if (norm > 0.0) axpy(grads.projection, model.config().lambda / norm, p.projection);
  }
  if (!cache.top_mask.empty()) hadamard_in_place(d_top, cache.top_mask);

  std::vector<Matrix> w_input_t, w_hidden_t;
  for (const auto& w : p.layers) {
    w_input_t.push_back(w.w_input.transposed());
    w_hidden_t.push_back(w.w_hidden.transposed());
  }

  std::vector<Matrix> dh_next(L, Matrix(B, H));
  std::vector<Matrix> dc_next(L, Matrix(B, H));
  Matrix d_gates(B, 4 * H);

  for (std::size_t step = T; step-- > 0;) {
    Matrix dh_above(B, H);
    for (std::size_t b = 0; b < B; ++b) {
      const auto src = d_top.row(step * B + b);
      std::copy(src.begin(), src.end(), dh_above.row(b).begin());
    }
    for (std::size_t l = L; l-- > 0;) {
      const Matrix& gates = cache.gates[step][l];
      const Matrix& tc = cache.cell_tanh[step][l];
      const Matrix& c_prev = step > 0 ? cache.cells[step - 1][l] : cache.initial.c[l];
      const Matrix& h_prev = step > 0 ? cache.hiddens[step - 1][l] : cache.initial.h[l];

      for (std::size_t b = 0; b < B; ++b) {
        const auto g = gates.row(b);
        auto dg = d_gates.row(b);
        for (std::size_t j = 0; j < H; ++j) {
          const double i_g = g[j], f_g = g[H + j], c_g = g[2 * H + j], o_g = g[3 * H + j];
          const double dh = dh_above(b, j) + dh_next[l](b, j);
          const double dc = dc_next[l](b, j) + dh * o_g * (1.0 - tc(b, j) * tc(b, j));
          dg[j] = dc * c_g * i_g * (1.0 - i_g);
          dg[H + j] = dc * c_prev(b, j) * f_g * (1.0 - f_g);
          dg[2 * H + j] = dc * i_g * (1.0 - c_g * c_g);
          dg[3 * H + j] = dh * tc(b, j) * o_g * (1.0 - o_g);
          dc_next[l](b, j) = dc * f_g;
        }
      }
      LstmWeights& gw = grads.layers[l];
      add_matmul_tn(gw.w_input, cache.layer_inputs[step][l], d_gates);
      add_matmul_tn(gw.w_hidden, h_prev, d_gates);
      add_column_sums(gw.b_input, d_gates);
      add_column_sums(gw.b_hidden, d_gates);

      dh_next[l].set_zero();
      add_matmul(dh_next[l], d_gates, w_hidden_t[l]);
      Matrix dx(B, p.layers[l].w_input.rows());
      add_matmul(dx, d_gates, w_input_t[l]);
      if (!cache.input_masks.empty()) hadamard_in_place(dx, cache.input_masks[step][l]);
      dh_above = std::move(dx);
    }
    for (std::size_t b = 0; b < B; ++b)
      axpy(grads.embedding.row(cache.inputs[b * T + step]), 1.0, dh_above.row(b));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Standalone update formulas

std::vector<double> embedding_grad_input(const ProbVector& p, const Matrix& output_embedding,
                                         TokenId target, const Matrix& dh2_du) {
  const std::size_t C = output_embedding.rows();
  const std::size_t H = output_embedding.cols();
  if (p.size() != C) throw ShapeError("embedding_grad_input: probability vector does not match vocabulary");
  if (target >= C) throw ArgumentError("embedding_grad_input: target out of range");
  if (dh2_du.rows() != H) throw ShapeError("embedding_grad_input: Jacobian must have H rows");

  std::vector<double> bracket(H, 0.0);
  for (std::size_t x = 0; x < C; ++x) axpy(bracket, p[x], output_embedding.row(x));
  axpy(bracket, -1.0, output_embedding.row(target));

  std::vector<double> row(dh2_du.cols(), 0.0);
  for (std::size_t i = 0; i < H; ++i) axpy(row, bracket[i], dh2_du.row(i));
  return row;
}

Matrix embedding_grad_output(const ProbVector& p, std::span<const double> h2, TokenId target) {
  if (target >= p.size()) throw ArgumentError("embedding_grad_output: target out of range");
  Matrix g(p.size(), h2.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double coeff = k == target ? p[k] - 1.0 : p[k];
    axpy(g.row(k), coeff, h2);
  }
  return g;
}

Matrix tied_gradient(const LanguageModel& model, const BpttBatch& batch, const LstmState& initial) {
  if (!model.tied()) throw ArgumentError("tied_gradient: model is not tied");
  const auto fwd = forward(model, batch, initial);
  return backward(model, fwd.cache).embedding;
}

double perplexity(const LanguageModel& model, std::span<const TokenId> ids, std::size_t seq_len) {
  if (ids.size() < 2) throw ArgumentError("perplexity: corpus must contain at least two tokens");
  if (seq_len == 0) throw ArgumentError("perplexity: seq_len must be positive");
  LstmState state = LstmState::zeros(model.config().num_layers, 1, model.hidden());
  double total = 0.0;
  const std::size_t positions = ids.size() - 1;
  for (std::size_t start = 0; start < positions; start += seq_len) {
    const std::size_t len = std::min(seq_len, positions - start);
    BpttBatch window;
    window.batch_size = 1;
    window.seq_len = len;
    window.inputs.assign(ids.begin() + static_cast<std::ptrdiff_t>(start),
                         ids.begin() + static_cast<std::ptrdiff_t>(start + len));
    window.targets.assign(ids.begin() + static_cast<std::ptrdiff_t>(start + 1),
                          ids.begin() + static_cast<std::ptrdiff_t>(start + len + 1));
    auto fwd = forward(model, window, state);
    total += fwd.cache.data_loss * static_cast<double>(len);
    state = std::move(fwd.final_state);
  }
  const double ppl = std::exp(total / static_cast<double>(positions));
  if (!std::isfinite(ppl)) throw NumericError("perplexity: non-finite result");
  return ppl;
}

Embedding export_embedding(const LanguageModel& model, const Vocabulary& vocab, EmbeddingRole role) {
  if (vocab.size() != model.vocab_size()) throw ArgumentError("export: vocabulary size mismatch");
  if (role == EmbeddingRole::tied && !model.tied()) throw ArgumentError("export: 'tied' role requires a tied model");
  const Matrix& m = role == EmbeddingRole::output ? model.output_embedding() : model.input_embedding();
  return Embedding(vocab.tokens(), m);
}

}  // namespace wt::lm

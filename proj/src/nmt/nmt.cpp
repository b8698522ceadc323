#include "wt/nmt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "wt/errors.hpp"

namespace wt::nmt {

namespace {

using Vec = std::vector<double>;

// y[o] += sum_i x[i] * w(i, col0 + o) for o < y.size()
void affine(std::span<double> y, std::span<const double> x, const Matrix& w, std::size_t col0 = 0) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = w.data() + i * w.cols() + col0;
    for (std::size_t o = 0; o < n; ++o) y[o] += xi * wr[o];
  }
}

// dw(i, col0 + o) += x[i] * dy[o]; dx[i] += sum_o w(i, col0 + o) * dy[o]
void affine_backward(std::span<const double> x, std::span<const double> dy, const Matrix& w, Matrix& dw,
                     std::span<double> dx, std::size_t col0 = 0) {
  const std::size_t n = dy.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double* wr = w.data() + i * w.cols() + col0;
    double* dwr = dw.data() + i * dw.cols() + col0;
    double acc = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
      dwr[o] += xi * dy[o];
      acc += wr[o] * dy[o];
    }
    if (!dx.empty()) dx[i] += acc;
  }
}

void add_to(std::span<double> y, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

struct GruStep {
  Vec x, h_prev, z, r, n, rh, h;
};

GruWeights make_gru(std::size_t in, std::size_t hidden) {
  return {Matrix(in, 3 * hidden), Matrix(hidden, 3 * hidden), Matrix(1, 3 * hidden)};
}

std::size_t gru_count(std::size_t in, std::size_t hidden) { return 3 * hidden * (in + hidden + 1); }

GruStep gru_forward(const GruWeights& g, std::span<const double> x, std::span<const double> h_prev) {
  const std::size_t hs = h_prev.size();
  GruStep s;
  s.x.assign(x.begin(), x.end());
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  Vec a(g.bias.values().begin(), g.bias.values().end());
  affine(a, x, g.w_input);
  affine(std::span<double>(a).first(2 * hs), h_prev, g.w_hidden);
  s.z.resize(hs);
  s.r.resize(hs);
  s.rh.resize(hs);
  for (std::size_t k = 0; k < hs; ++k) {
    s.z[k] = sigmoid(a[k]);
    s.r[k] = sigmoid(a[hs + k]);
    s.rh[k] = s.r[k] * h_prev[k];
  }
  affine(std::span<double>(a).subspan(2 * hs), s.rh, g.w_hidden, 2 * hs);
  s.n.resize(hs);
  s.h.resize(hs);
  for (std::size_t k = 0; k < hs; ++k) {
    s.n[k] = std::tanh(a[2 * hs + k]);
    s.h[k] = (1.0 - s.z[k]) * h_prev[k] + s.z[k] * s.n[k];
  }
  return s;
}

// Accumulates parameter gradients; adds into dx and dh_prev.
void gru_backward(const GruWeights& g, const GruStep& s, std::span<const double> dh, GruWeights& grad,
                  std::span<double> dx, std::span<double> dh_prev) {
  const std::size_t hs = s.h.size();
  Vec da(3 * hs);
  for (std::size_t k = 0; k < hs; ++k) {
    da[k] = dh[k] * (s.n[k] - s.h_prev[k]) * s.z[k] * (1.0 - s.z[k]);
    da[2 * hs + k] = dh[k] * s.z[k] * (1.0 - s.n[k] * s.n[k]);
    dh_prev[k] += dh[k] * (1.0 - s.z[k]);
  }
  Vec drh(hs);
  affine_backward(s.rh, std::span<const double>(da).subspan(2 * hs), g.w_hidden, grad.w_hidden, drh, 2 * hs);
  for (std::size_t k = 0; k < hs; ++k) {
    da[hs + k] = drh[k] * s.h_prev[k] * s.r[k] * (1.0 - s.r[k]);
    dh_prev[k] += drh[k] * s.r[k];
  }
  affine_backward(s.h_prev, std::span<const double>(da).first(2 * hs), g.w_hidden, grad.w_hidden, dh_prev, 0);
  affine_backward(s.x, da, g.w_input, grad.w_input, dx, 0);
  add_to(grad.bias.values(), da);
}

Matrix& target_role(NmtParameters& p, Tying tying) {
  return tying == Tying::three_way ? p.source_embedding : p.target_embedding;
}

Matrix& output_role(NmtParameters& p, Tying tying) {
  switch (tying) {
    case Tying::none: return p.output_embedding;
    case Tying::decoder: return p.target_embedding;
    case Tying::three_way: return p.source_embedding;
  }
  return p.output_embedding;
}

const Matrix& target_role(const NmtParameters& p, Tying tying) {
  return target_role(const_cast<NmtParameters&>(p), tying);
}

const Matrix& output_role(const NmtParameters& p, Tying tying) {
  return output_role(const_cast<NmtParameters&>(p), tying);
}

void check_ids(std::span<const TokenId> ids, std::size_t vocab, const char* what) {
  for (TokenId id : ids)
    if (id >= vocab)
      throw ArgumentError(std::string("nmt: ") + what + " id " + std::to_string(id) + " out of range for vocabulary " +
                          std::to_string(vocab));
}

struct EncoderCache {
  std::vector<GruStep> forward;   // forward[j] produces f_j
  std::vector<GruStep> backward;  // backward[j] produces b_j
  Annotations annotations;
  std::vector<Vec> projected;     // att_u^T h_j
};

EncoderCache run_encoder(const NmtModel& model, std::span<const TokenId> source) {
  if (source.empty()) throw ArgumentError("nmt: empty source sentence");
  check_ids(source, model.config().source_vocab, "source");
  const auto& p = model.params();
  const std::size_t hs = model.config().hidden;
  const std::size_t n = source.size();
  EncoderCache e;
  e.forward.reserve(n);
  e.backward.resize(n);
  Vec h(hs, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.forward.push_back(gru_forward(p.encoder_forward, p.source_embedding.row(source[j]), h));
    h = e.forward.back().h;
  }
  h.assign(hs, 0.0);
  for (std::size_t j = n; j-- > 0;) {
    e.backward[j] = gru_forward(p.encoder_backward, p.source_embedding.row(source[j]), h);
    h = e.backward[j].h;
  }
  e.annotations.h.resize(n);
  e.projected.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    Vec& a = e.annotations.h[j];
    a = e.forward[j].h;
    a.insert(a.end(), e.backward[j].h.begin(), e.backward[j].h.end());
    e.projected[j].assign(hs, 0.0);
    affine(e.projected[j], a, p.att_u);
  }
  return e;
}

struct AttentionCache {
  std::vector<Vec> pre;  // tanh(W s + U h_j + b)
  Vec weights;
  Vec context;
};

AttentionCache attention_forward(const NmtModel& model, std::span<const double> state, const Annotations& ann,
                                 const std::vector<Vec>& projected) {
  const auto& p = model.params();
  const std::size_t hs = model.config().hidden;
  const std::size_t n = ann.size();
  Vec q(p.att_b.values().begin(), p.att_b.values().end());
  affine(q, state, p.att_w);
  AttentionCache c;
  c.pre.resize(n);
  Vec scores(n);
  for (std::size_t j = 0; j < n; ++j) {
    Vec& pre = c.pre[j];
    pre.resize(hs);
    double e = 0.0;
    for (std::size_t k = 0; k < hs; ++k) {
      pre[k] = std::tanh(q[k] + projected[j][k]);
      e += pre[k] * p.att_v[k];
    }
    scores[j] = e;
  }
  const ProbVector a = softmax(scores);
  c.weights.assign(a.values().begin(), a.values().end());
  c.context.assign(2 * hs, 0.0);
  for (std::size_t j = 0; j < n; ++j) axpy(c.context, c.weights[j], ann.h[j]);
  return c;
}

void attention_backward(const NmtModel& model, const AttentionCache& c, std::span<const double> state,
                        const Annotations& ann, std::span<const double> dcontext, NmtParameters& grad,
                        std::span<double> dstate, std::vector<Vec>& dann, std::vector<Vec>& dprojected) {
  const auto& p = model.params();
  const std::size_t hs = model.config().hidden;
  const std::size_t n = ann.size();
  Vec dw(n);
  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    dw[j] = dot(dcontext, ann.h[j]);
    mean += c.weights[j] * dw[j];
    axpy(dann[j], c.weights[j], dcontext);
  }
  Vec dq(hs, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double de = c.weights[j] * (dw[j] - mean);
    for (std::size_t k = 0; k < hs; ++k) {
      const double pre = c.pre[j][k];
      grad.att_v[k] += de * pre;
      const double dpre = de * p.att_v[k] * (1.0 - pre * pre);
      dq[k] += dpre;
      dprojected[j][k] += dpre;
    }
  }
  affine_backward(state, dq, p.att_w, grad.att_w, dstate);
  add_to(grad.att_b.values(), dq);
}

struct DecoderStep {
  AttentionCache attention;
  GruStep gru;
  Vec readout_in;  // [s_t ; c_t ; U y_prev]
  Vec readout;     // G
  Vec probs;
};

struct PairCache {
  EncoderCache encoder;
  Vec mean;
  Vec s0;
  std::vector<TokenId> prev;
  std::vector<TokenId> next;
  std::vector<DecoderStep> steps;
  double loss = 0.0;  // summed over target tokens
};

Vec readout_forward(const NmtModel& model, const Vec& readout_in) {
  const auto& p = model.params();
  Vec g(p.readout_b.values().begin(), p.readout_b.values().end());
  affine(g, readout_in, p.readout_w);
  for (double& v : g) v = std::tanh(v);
  return g;
}

Vec logits_from(const Matrix& out, std::span<const double> g) {
  Vec logits(out.rows());
  for (std::size_t k = 0; k < out.rows(); ++k) logits[k] = dot(out.row(k), g);
  return logits;
}

Vec initial_from_mean(const NmtModel& model, const Vec& mean) {
  const auto& p = model.params();
  Vec s(p.init_b.values().begin(), p.init_b.values().end());
  affine(s, mean, p.init_w);
  for (double& v : s) v = std::tanh(v);
  return s;
}

Vec mean_annotation(const Annotations& ann) {
  Vec m(ann.h.front().size(), 0.0);
  for (const auto& h : ann.h) add_to(m, h);
  for (double& v : m) v /= static_cast<double>(ann.size());
  return m;
}

Vec concat(std::initializer_list<std::span<const double>> parts) {
  Vec out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

PairCache forward_pair(const NmtModel& model, const SentencePair& pair) {
  const auto& cfg = model.config();
  check_ids(pair.target, cfg.target_vocab, "target");
  PairCache c;
  c.encoder = run_encoder(model, pair.source);
  c.mean = mean_annotation(c.encoder.annotations);
  c.s0 = initial_from_mean(model, c.mean);
  c.next = pair.target;
  c.next.push_back(cfg.eos);
  c.prev.push_back(cfg.eos);
  c.prev.insert(c.prev.end(), pair.target.begin(), pair.target.end());

  const Matrix& u = model.target_embedding();
  const Matrix& v = model.output_embedding();
  Vec state = c.s0;
  c.steps.resize(c.next.size());
  for (std::size_t t = 0; t < c.next.size(); ++t) {
    DecoderStep& d = c.steps[t];
    d.attention = attention_forward(model, state, c.encoder.annotations, c.encoder.projected);
    const auto emb = u.row(c.prev[t]);
    const Vec x = concat({emb, d.attention.context});
    d.gru = gru_forward(model.params().decoder, x, state);
    d.readout_in = concat({d.gru.h, d.attention.context, emb});
    d.readout = readout_forward(model, d.readout_in);
    const ProbVector probs = softmax(logits_from(v, d.readout));
    d.probs.assign(probs.values().begin(), probs.values().end());
    c.loss += xent_loss(probs, c.next[t]);
    state = d.gru.h;
  }
  return c;
}

void backward_pair(const NmtModel& model, const PairCache& c, std::span<const TokenId> source, NmtParameters& g,
                   double scale) {
  const auto& cfg = model.config();
  const auto& p = model.params();
  const std::size_t hs = cfg.hidden;
  const std::size_t e = cfg.embed;
  const std::size_t n = source.size();
  const Tying tying = cfg.tying;
  const Matrix& v = model.output_embedding();
  Matrix& gu = target_role(g, tying);
  Matrix& gv = output_role(g, tying);

  std::vector<Vec> dann(n, Vec(2 * hs, 0.0));
  std::vector<Vec> dproj(n, Vec(hs, 0.0));
  Vec ds(hs, 0.0);
  for (std::size_t t = c.steps.size(); t-- > 0;) {
    const DecoderStep& d = c.steps[t];
    Vec dlogits = d.probs;
    dlogits[c.next[t]] -= 1.0;
    for (double& x : dlogits) x *= scale;
    Vec dg(e, 0.0);
    for (std::size_t k = 0; k < v.rows(); ++k) {
      axpy(gv.row(k), dlogits[k], d.readout);
      axpy(dg, dlogits[k], v.row(k));
    }
    for (std::size_t k = 0; k < e; ++k) dg[k] *= 1.0 - d.readout[k] * d.readout[k];
    Vec drin(d.readout_in.size(), 0.0);
    affine_backward(d.readout_in, dg, p.readout_w, g.readout_w, drin);
    add_to(g.readout_b.values(), dg);

    add_to(ds, std::span<const double>(drin).first(hs));
    Vec dx(d.gru.x.size(), 0.0);
    Vec ds_prev(hs, 0.0);
    gru_backward(p.decoder, d.gru, ds, g.decoder, dx, ds_prev);

    auto demb = gu.row(c.prev[t]);
    add_to(demb, std::span<const double>(dx).first(e));
    add_to(demb, std::span<const double>(drin).subspan(3 * hs, e));
    Vec dc(drin.begin() + static_cast<std::ptrdiff_t>(hs), drin.begin() + static_cast<std::ptrdiff_t>(3 * hs));
    add_to(dc, std::span<const double>(dx).subspan(e, 2 * hs));
    const std::span<const double> s_prev = d.gru.h_prev;
    attention_backward(model, d.attention, s_prev, c.encoder.annotations, dc, g, ds_prev, dann, dproj);
    ds = std::move(ds_prev);
  }

  Vec da0(hs);
  for (std::size_t k = 0; k < hs; ++k) da0[k] = ds[k] * (1.0 - c.s0[k] * c.s0[k]);
  Vec dmean(2 * hs, 0.0);
  affine_backward(c.mean, da0, p.init_w, g.init_w, dmean);
  add_to(g.init_b.values(), da0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    axpy(dann[j], inv_n, dmean);
    affine_backward(c.encoder.annotations.h[j], dproj[j], p.att_u, g.att_u, dann[j]);
  }

  Vec carry(hs, 0.0);
  Vec dx(e);
  for (std::size_t j = n; j-- > 0;) {
    Vec dh(dann[j].begin(), dann[j].begin() + static_cast<std::ptrdiff_t>(hs));
    add_to(dh, carry);
    carry.assign(hs, 0.0);
    dx.assign(e, 0.0);
    gru_backward(p.encoder_forward, c.encoder.forward[j], dh, g.encoder_forward, dx, carry);
    add_to(g.source_embedding.row(source[j]), dx);
  }
  carry.assign(hs, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    Vec dh(dann[j].begin() + static_cast<std::ptrdiff_t>(hs), dann[j].end());
    add_to(dh, carry);
    carry.assign(hs, 0.0);
    dx.assign(e, 0.0);
    gru_backward(p.encoder_backward, c.encoder.backward[j], dh, g.encoder_backward, dx, carry);
    add_to(g.source_embedding.row(source[j]), dx);
  }
}

}  // namespace

std::string to_string(Tying tying) {
  switch (tying) {
    case Tying::none: return "none";
    case Tying::decoder: return "decoder";
    case Tying::three_way: return "twwt";
  }
  return "none";
}

Tying parse_tying(const std::string& name) {
  if (name == "none") return Tying::none;
  if (name == "decoder" || name == "decoder-wt") return Tying::decoder;
  if (name == "twwt") return Tying::three_way;
  throw ConfigError("tying", "expected none, decoder or twwt, got '" + name + "'");
}

void NmtConfig::validate() const {
  if (source_vocab == 0) throw ConfigError("source_vocab", "must be positive");
  if (target_vocab == 0) throw ConfigError("target_vocab", "must be positive");
  if (embed == 0) throw ConfigError("embed", "must be positive");
  if (hidden == 0) throw ConfigError("hidden", "must be positive");
  if (eos >= target_vocab) throw ConfigError("eos", "id outside the target vocabulary");
  if (tying == Tying::three_way && source_vocab != target_vocab)
    throw ConfigError("tying", "twwt needs one shared vocabulary (source " + std::to_string(source_vocab) +
                                   " vs target " + std::to_string(target_vocab) + ")");
}

NmtParameters NmtParameters::zeros_like() const {
  NmtParameters z;
  auto src = named();
  auto dst = z.named();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = Matrix(src[i].second->rows(), src[i].second->cols());
  return z;
}

std::vector<std::pair<std::string, Matrix*>> NmtParameters::named() {
  return {{"source_embedding", &source_embedding},
          {"target_embedding", &target_embedding},
          {"output_embedding", &output_embedding},
          {"encoder_forward.w_input", &encoder_forward.w_input},
          {"encoder_forward.w_hidden", &encoder_forward.w_hidden},
          {"encoder_forward.bias", &encoder_forward.bias},
          {"encoder_backward.w_input", &encoder_backward.w_input},
          {"encoder_backward.w_hidden", &encoder_backward.w_hidden},
          {"encoder_backward.bias", &encoder_backward.bias},
          {"init_w", &init_w},
          {"init_b", &init_b},
          {"att_w", &att_w},
          {"att_u", &att_u},
          {"att_b", &att_b},
          {"att_v", &att_v},
          {"decoder.w_input", &decoder.w_input},
          {"decoder.w_hidden", &decoder.w_hidden},
          {"decoder.bias", &decoder.bias},
          {"readout_w", &readout_w},
          {"readout_b", &readout_b}};
}

std::vector<std::pair<std::string, const Matrix*>> NmtParameters::named() const {
  auto mut = const_cast<NmtParameters*>(this)->named();
  std::vector<std::pair<std::string, const Matrix*>> out;
  out.reserve(mut.size());
  for (auto& [name, m] : mut) out.emplace_back(name, m);
  return out;
}

std::vector<Matrix*> NmtParameters::list() {
  std::vector<Matrix*> out;
  for (auto& [name, m] : named())
    if (!m->empty()) out.push_back(m);
  return out;
}

std::size_t NmtParameters::count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : named()) n += m->size();
  return n;
}

NmtModel::NmtModel(NmtConfig config) : config_(config) {
  config_.validate();
  const std::size_t e = config_.embed;
  const std::size_t h = config_.hidden;
  params_.source_embedding = Matrix(config_.source_vocab, e);
  if (config_.tying != Tying::three_way) params_.target_embedding = Matrix(config_.target_vocab, e);
  if (config_.tying == Tying::none) params_.output_embedding = Matrix(config_.target_vocab, e);
  params_.encoder_forward = make_gru(e, h);
  params_.encoder_backward = make_gru(e, h);
  params_.init_w = Matrix(2 * h, h);
  params_.init_b = Matrix(1, h);
  params_.att_w = Matrix(h, h);
  params_.att_u = Matrix(2 * h, h);
  params_.att_b = Matrix(1, h);
  params_.att_v = Matrix(h, 1);
  params_.decoder = make_gru(e + 2 * h, h);
  params_.readout_w = Matrix(3 * h + e, e);
  params_.readout_b = Matrix(1, e);
}

const Matrix& NmtModel::target_embedding() const noexcept { return target_role(params_, config_.tying); }

const Matrix& NmtModel::output_embedding() const noexcept { return output_role(params_, config_.tying); }

void NmtModel::init_uniform(Rng& rng, double scale) {
  for (Matrix* m : params_.list()) fill_uniform(*m, rng, scale);
}

NmtModel NmtModel::untied_clone() const {
  NmtConfig c = config_;
  c.tying = Tying::none;
  NmtModel clone(c);
  clone.params_ = params_;
  clone.params_.target_embedding = target_embedding();
  clone.params_.output_embedding = output_embedding();
  return clone;
}

std::size_t param_count(const NmtConfig& c) {
  c.validate();
  const std::size_t e = c.embed;
  const std::size_t h = c.hidden;
  std::size_t embeddings = 0;
  switch (c.tying) {
    case Tying::none: embeddings = (c.source_vocab + 2 * c.target_vocab) * e; break;
    case Tying::decoder: embeddings = (c.source_vocab + c.target_vocab) * e; break;
    case Tying::three_way: embeddings = c.source_vocab * e; break;
  }
  const std::size_t encoder = 2 * gru_count(e, h);
  const std::size_t init = 2 * h * h + h;
  const std::size_t attention = h * h + 2 * h * h + h + h;
  const std::size_t decoder = gru_count(e + 2 * h, h);
  const std::size_t readout = (3 * h + e) * e + e;
  return embeddings + encoder + init + attention + decoder + readout;
}

Annotations encode(const NmtModel& model, std::span<const TokenId> source) {
  return run_encoder(model, source).annotations;
}

Attention attend(const NmtModel& model, std::span<const double> state, const Annotations& annotations) {
  if (state.size() != model.config().hidden)
    throw ShapeError("nmt attend: state has " + std::to_string(state.size()) + " entries, expected " +
                     std::to_string(model.config().hidden));
  if (annotations.size() == 0) throw ArgumentError("nmt attend: no annotations");
  std::vector<Vec> projected(annotations.size(), Vec(model.config().hidden, 0.0));
  for (std::size_t j = 0; j < annotations.size(); ++j) {
    if (annotations.h[j].size() != 2 * model.config().hidden)
      throw ShapeError("nmt attend: annotation " + std::to_string(j) + " has wrong width");
    affine(projected[j], annotations.h[j], model.params().att_u);
  }
  AttentionCache c = attention_forward(model, state, annotations, projected);
  return {std::move(c.context), std::move(c.weights)};
}

std::vector<double> initial_state(const NmtModel& model, const Annotations& annotations) {
  if (annotations.size() == 0) throw ArgumentError("nmt initial_state: no annotations");
  return initial_from_mean(model, mean_annotation(annotations));
}

StepOutput decode_step(const NmtModel& model, TokenId prev, std::span<const double> state,
                       std::span<const double> context) {
  const auto& cfg = model.config();
  if (prev >= cfg.target_vocab) throw ArgumentError("nmt decode_step: previous id out of range");
  if (state.size() != cfg.hidden || context.size() != 2 * cfg.hidden)
    throw ShapeError("nmt decode_step: state or context has the wrong width");
  const auto emb = model.target_embedding().row(prev);
  const Vec x = concat({emb, context});
  GruStep s = gru_forward(model.params().decoder, x, state);
  const Vec g = readout_forward(model, concat({s.h, context, emb}));
  return {logits_from(model.output_embedding(), g), std::move(s.h)};
}

std::vector<TokenId> translate_greedy(const NmtModel& model, std::span<const TokenId> source,
                                      std::size_t max_len) {
  const EncoderCache enc = run_encoder(model, source);
  Vec state = initial_state(model, enc.annotations);
  std::vector<TokenId> out;
  TokenId prev = model.config().eos;
  while (out.size() < max_len) {
    const AttentionCache att = attention_forward(model, state, enc.annotations, enc.projected);
    StepOutput step = decode_step(model, prev, state, att.context);
    const auto best = std::max_element(step.logits.begin(), step.logits.end());
    const auto id = static_cast<TokenId>(best - step.logits.begin());
    if (id == model.config().eos) break;
    out.push_back(id);
    prev = id;
    state = std::move(step.state);
  }
  return out;
}

double pair_loss(const NmtModel& model, const SentencePair& pair) {
  const PairCache c = forward_pair(model, pair);
  return c.loss / static_cast<double>(c.next.size());
}

double accumulate_gradients(const NmtModel& model, const SentencePair& pair, NmtParameters& grads, double scale) {
  const PairCache c = forward_pair(model, pair);
  backward_pair(model, c, pair.source, grads, scale);
  return c.loss;
}

NmtParameters gradients(const NmtModel& model, const SentencePair& pair) {
  NmtParameters g = model.params().zeros_like();
  accumulate_gradients(model, pair, g, 1.0 / static_cast<double>(pair.target.size() + 1));
  return g;
}

Matrix tied_gradient(const NmtModel& model, const SentencePair& pair) {
  if (model.tying() == Tying::none) throw ArgumentError("nmt tied_gradient: model is untied");
  NmtParameters g = gradients(model, pair);
  return model.tying() == Tying::decoder ? g.target_embedding : g.source_embedding;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs", "must be positive");
  if (batch_size == 0) throw ConfigError("batch_size", "must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale", "must be > 0");
  optimizer.validate();
}

std::string format_metrics(const EpochRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "epoch=%zu\tlr=%.6g\ttrain_loss=%.6f", r.epoch, r.learning_rate, r.train_loss);
  return buf;
}

std::vector<EpochRecord> train(NmtModel& model, std::span<const SentencePair> pairs, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
  config.validate();
  if (pairs.empty()) throw ArgumentError("nmt train: no sentence pairs");
  Rng rng(config.seed);
  model.init_uniform(rng, config.init_scale);
  Optimizer optimizer(config.optimizer);
  NmtParameters grads = model.params().zeros_like();
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochRecord> records;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    optimizer.set_learning_rate(optimizer.learning_rate_for_epoch(static_cast<int>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t token_count = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::size_t tokens = 0;
      for (std::size_t i = begin; i < end; ++i) tokens += pairs[order[i]].target.size() + 1;
      for (Matrix* m : grads.list()) m->set_zero();
      double batch_loss = 0.0;
      for (std::size_t i = begin; i < end; ++i)
        batch_loss += accumulate_gradients(model, pairs[order[i]], grads, 1.0 / static_cast<double>(tokens));
      if (!std::isfinite(batch_loss))
        throw NumericError("nmt train: non-finite loss at epoch " + std::to_string(epoch));
      auto params = model.params().list();
      auto grad_list = grads.list();
      optimizer.step(params, grad_list);
      loss_sum += batch_loss;
      token_count += tokens;
    }

    EpochRecord r;
    r.epoch = epoch;
    r.learning_rate = optimizer.learning_rate();
    r.train_loss = loss_sum / static_cast<double>(token_count);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    records.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  return records;
}

double token_accuracy(const NmtModel& model, std::span<const SentencePair> pairs, std::size_t max_len) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& pair : pairs) {
    const auto hyp = translate_greedy(model, pair.source, max_len);
    total += std::max(hyp.size(), pair.target.size());
    for (std::size_t i = 0; i < std::min(hyp.size(), pair.target.size()); ++i) correct += hyp[i] == pair.target[i];
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace wt::nmt

#include <doctest.h>

#include <cmath>
#include <string>

#include "support/copy_task.hpp"
#include "wt/errors.hpp"
#include "wt/nmt.hpp"

using namespace wt;
using namespace wt::nmt;

namespace {

NmtConfig make_config(std::size_t cs, std::size_t ct, std::size_t e, std::size_t h, Tying tying, TokenId eos = 1) {
  NmtConfig c;
  c.source_vocab = cs;
  c.target_vocab = ct;
  c.embed = e;
  c.hidden = h;
  c.tying = tying;
  c.eos = eos;
  return c;
}

NmtModel make_model(const NmtConfig& cfg, std::uint64_t seed, double scale = 0.5) {
  NmtModel m(cfg);
  Rng rng(seed);
  m.init_uniform(rng, scale);
  return m;
}

SentencePair random_pair(Rng& rng, std::size_t cs, std::size_t ct, std::size_t max_src, std::size_t max_tgt) {
  SentencePair p;
  const std::size_t ns = 1 + rng.below(max_src);
  const std::size_t nt = rng.below(max_tgt + 1);
  for (std::size_t i = 0; i < ns; ++i) p.source.push_back(static_cast<TokenId>(rng.below(cs)));
  for (std::size_t i = 0; i < nt; ++i) p.target.push_back(static_cast<TokenId>(rng.below(ct)));
  return p;
}

double loss_with(const NmtModel& model, const std::string& name, const Matrix& value, const SentencePair& pair) {
  NmtModel copy = model;
  for (auto& [n, m] : copy.params().named())
    if (n == name) *m = value;
  return pair_loss(copy, pair);
}

void check_all_gradients(const NmtModel& model, const SentencePair& pair) {
  NmtParameters grads = gradients(model, pair);
  const auto grad_list = grads.named();
  const auto params = model.params().named();
  REQUIRE(grad_list.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params[i].first;
    CAPTURE(name);
    if (params[i].second->empty()) {
      CHECK(grad_list[i].second->empty());
      continue;
    }
    const Matrix numeric = finite_diff([&](const Matrix& x) { return loss_with(model, name, x, pair); },
                                       *params[i].second, 1e-4);
    CHECK(relative_error(*grad_list[i].second, numeric) < 1e-6);
  }
}

}  // namespace

TEST_CASE("tying names") {
  CHECK(parse_tying("none") == Tying::none);
  CHECK(parse_tying("decoder") == Tying::decoder);
  CHECK(parse_tying("decoder-wt") == Tying::decoder);
  CHECK(parse_tying("twwt") == Tying::three_way);
  CHECK(to_string(Tying::three_way) == "twwt");
  CHECK_THROWS_AS(parse_tying("both"), ConfigError);
}

TEST_CASE("configuration is validated") {
  CHECK_THROWS_AS(NmtModel(make_config(5, 6, 3, 2, Tying::three_way)), ConfigError);
  CHECK_THROWS_AS(NmtModel(make_config(5, 6, 0, 2, Tying::none)), ConfigError);
  CHECK_THROWS_AS(NmtModel(make_config(5, 6, 3, 2, Tying::none, 6)), ConfigError);
  try {
    NmtModel(make_config(5, 6, 3, 2, Tying::three_way));
  } catch (const ConfigError& e) {
    CHECK(e.field() == "tying");
  }
}

TEST_CASE("storage matches the closed-form count") {
  for (Tying t : {Tying::none, Tying::decoder, Tying::three_way}) {
    const std::size_t cs = t == Tying::three_way ? 9 : 7;
    const NmtConfig cfg = make_config(cs, 9, 4, 3, t);
    CHECK(NmtModel(cfg).param_count() == param_count(cfg));
  }
}

TEST_CASE("tying removes whole embedding matrices") {
  const std::size_t cs = 30, ct = 40, cu = 55, e = 16, h = 8;
  const std::size_t none = param_count(make_config(cs, ct, e, h, Tying::none));
  const std::size_t dec = param_count(make_config(cs, ct, e, h, Tying::decoder));
  const std::size_t twwt = param_count(make_config(cu, cu, e, h, Tying::three_way));
  CHECK(none - dec == ct * e);
  CHECK(dec - twwt == (cs + ct - cu) * e);
  CHECK(none > dec);
  CHECK(dec > twwt);
}

TEST_CASE("attention weights form a distribution over annotations") {
  const NmtModel m = make_model(make_config(6, 6, 3, 4, Tying::none), 3);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const SentencePair pair = random_pair(rng, 6, 6, 7, 0);
    const Annotations ann = encode(m, pair.source);
    REQUIRE(ann.size() == pair.source.size());
    std::vector<double> s(4);
    for (double& v : s) v = rng.uniform(-1, 1);
    const Attention a = attend(m, s, ann);
    double total = 0.0;
    for (double w : a.weights) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < 8; ++k) {
      double expect = 0.0;
      for (std::size_t j = 0; j < ann.size(); ++j) expect += a.weights[j] * ann.h[j][k];
      CHECK(a.context[k] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero scorer attends uniformly") {
  NmtModel m = make_model(make_config(6, 6, 3, 4, Tying::none), 5);
  m.params().att_v.set_zero();
  const std::vector<TokenId> src = {1, 4, 2, 5};
  const Annotations ann = encode(m, src);
  const Attention a = attend(m, std::vector<double>(4, 0.3), ann);
  for (double w : a.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("annotations concatenate both directions") {
  const NmtModel m = make_model(make_config(6, 6, 3, 4, Tying::none), 6);
  const std::vector<TokenId> src = {3, 1, 4};
  const std::vector<TokenId> rev = {4, 1, 3};
  const Annotations a = encode(m, src);
  // The forward half at position 0 depends only on the first token.
  const Annotations single = encode(m, std::vector<TokenId>{3});
  for (std::size_t k = 0; k < 4; ++k) CHECK(single.h[0][k] == a.h[0][k]);
  NmtModel swapped = m;
  std::swap(swapped.params().encoder_forward, swapped.params().encoder_backward);
  const Annotations b = encode(swapped, rev);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(b.h[2 - j][k] == a.h[j][4 + k]);
      CHECK(b.h[2 - j][4 + k] == a.h[j][k]);
    }
}

TEST_CASE("step functions reproduce the teacher-forced loss") {
  for (Tying t : {Tying::none, Tying::decoder, Tying::three_way}) {
    const NmtModel m = make_model(make_config(7, 7, 3, 4, t), 8);
    Rng rng(9);
    const SentencePair pair = random_pair(rng, 7, 7, 5, 4);
    const Annotations ann = encode(m, pair.source);
    std::vector<double> state = initial_state(m, ann);
    TokenId prev = m.config().eos;
    std::vector<TokenId> next = pair.target;
    next.push_back(m.config().eos);
    double loss = 0.0;
    for (TokenId y : next) {
      const Attention a = attend(m, state, ann);
      const StepOutput out = decode_step(m, prev, state, a.context);
      loss += xent_loss(softmax(out.logits), y);
      state = out.state;
      prev = y;
    }
    CHECK(loss / static_cast<double>(next.size()) == doctest::Approx(pair_loss(m, pair)).epsilon(1e-13));
  }
}

TEST_CASE("backward matches finite differences on every parameter") {
  Rng rng(12);
  for (Tying t : {Tying::none, Tying::decoder, Tying::three_way}) {
    CAPTURE(to_string(t));
    const NmtModel m = make_model(make_config(6, 6, 3, 3, t), 20 + static_cast<int>(t));
    check_all_gradients(m, random_pair(rng, 6, 6, 4, 3));
  }
  const NmtModel distinct = make_model(make_config(5, 8, 2, 3, Tying::decoder), 30);
  check_all_gradients(distinct, random_pair(rng, 5, 8, 3, 3));
}

TEST_CASE("empty target still trains the end-of-sentence prediction") {
  const NmtModel m = make_model(make_config(5, 5, 2, 3, Tying::none), 31);
  SentencePair pair{{2, 3}, {}};
  check_all_gradients(m, pair);
}

TEST_CASE("tied gradients equal the clone-and-sum of their roles") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const Tying t = trial % 2 == 0 ? Tying::decoder : Tying::three_way;
    const std::size_t c = 4 + rng.below(6);
    const std::size_t cs = t == Tying::three_way ? c : 3 + rng.below(6);
    const NmtModel tied = make_model(make_config(cs, c, 1 + rng.below(3), 1 + rng.below(3), t), rng.next());
    const NmtModel clone = tied.untied_clone();
    const SentencePair pair = random_pair(rng, cs, c, 4, 4);

    const Matrix shared = tied_gradient(tied, pair);
    const NmtParameters roles = gradients(clone, pair);
    Matrix expect = roles.target_embedding + roles.output_embedding;
    if (t == Tying::three_way) expect += roles.source_embedding;
    CHECK(max_abs_diff(shared, expect) <= 1e-12);
    if (t == Tying::decoder) {
      const NmtParameters own = gradients(tied, pair);
      CHECK(max_abs_diff(own.source_embedding, roles.source_embedding) <= 1e-12);
    }
  }
  const NmtModel untied = make_model(make_config(5, 5, 2, 2, Tying::none), 1);
  CHECK_THROWS_AS(tied_gradient(untied, SentencePair{{1}, {2}}), ArgumentError);
}

TEST_CASE("untrained uniform model decodes to the length limit") {
  NmtModel m = make_model(make_config(6, 6, 3, 4, Tying::none, 3), 2);
  m.params().output_embedding.set_zero();
  const auto out = translate_greedy(m, std::vector<TokenId>{1, 2}, 7);
  CHECK(out.size() == 7);
  for (TokenId id : out) CHECK(id == 0);
}

TEST_CASE("greedy decoding stops at eos") {
  NmtModel m = make_model(make_config(6, 6, 3, 4, Tying::none, 3), 2);
  Matrix& v = m.params().output_embedding;
  v.set_zero();
  m.params().readout_w.set_zero();
  m.params().readout_b.fill(0.5);
  for (std::size_t k = 0; k < 3; ++k) v(3, k) = 1.0;
  CHECK(translate_greedy(m, std::vector<TokenId>{1, 2}, 7).empty());
}

TEST_CASE("bad inputs are rejected") {
  const NmtModel m = make_model(make_config(5, 6, 2, 2, Tying::none), 1);
  CHECK_THROWS_AS(encode(m, std::vector<TokenId>{}), ArgumentError);
  CHECK_THROWS_AS(encode(m, std::vector<TokenId>{5}), ArgumentError);
  CHECK_THROWS_AS(pair_loss(m, SentencePair{{1}, {6}}), ArgumentError);
  CHECK_THROWS_AS(decode_step(m, 0, std::vector<double>(3), std::vector<double>(4)), ShapeError);
  CHECK_THROWS_AS(decode_step(m, 9, std::vector<double>(2), std::vector<double>(4)), ArgumentError);
}

TEST_CASE("a short copy task is learned") {
  const testing::CopyTask task(8, 5, 11);
  const auto pairs = task.pairs(600);
  const auto held_out = task.pairs(100, 12);
  NmtModel m(make_config(task.vocab_size(), task.vocab_size(), 12, 16, Tying::three_way, task.eos()));
  TrainConfig tc;
  tc.epochs = 70;
  tc.batch_size = 16;
  tc.seed = 3;
  const auto records = train(m, pairs, tc);
  CHECK(records.back().train_loss < 0.1);
  CHECK(token_accuracy(m, held_out, 10) > 0.95);
}

TEST_CASE("training is reproducible for a seed") {
  const testing::CopyTask task(6, 4, 5);
  const auto pairs = task.pairs(100);
  NmtConfig cfg = make_config(task.vocab_size(), task.vocab_size(), 4, 5, Tying::decoder, task.eos());
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  NmtModel a(cfg), b(cfg);
  const auto ra = train(a, pairs, tc);
  const auto rb = train(b, pairs, tc);
  REQUIRE(ra.size() == 3);
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(format_metrics(ra[i]) == format_metrics(rb[i]));
  CHECK(a.params().source_embedding == b.params().source_embedding);
  CHECK(a.params().decoder.w_hidden == b.params().decoder.w_hidden);
  CHECK(format_metrics(ra[0]).rfind("epoch=1\tlr=1\ttrain_loss=", 0) == 0);
}

TEST_CASE("training rejects empty data and bad settings") {
  NmtModel m(make_config(5, 5, 2, 2, Tying::none));
  TrainConfig tc;
  CHECK_THROWS_AS(train(m, std::vector<SentencePair>{}, tc), ArgumentError);
  tc.batch_size = 0;
  CHECK_THROWS_AS(train(m, std::vector<SentencePair>{{{1}, {1}}}, tc), ConfigError);
}

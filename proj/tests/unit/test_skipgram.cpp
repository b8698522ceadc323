#include <doctest.h>

#include <cmath>

#include "wt/corpus.hpp"
#include "wt/errors.hpp"
#include "wt/numeric.hpp"
#include "wt/skipgram.hpp"

using namespace wt;
using namespace wt::skipgram;

namespace {

SkipGramModel random_model(std::size_t c, std::size_t h, bool tied, std::uint64_t seed) {
  SkipGramModel m(c, h, tied);
  Rng rng(seed);
  m.init_uniform(rng, 0.5);
  return m;
}

// Finite differences of `loss` with respect to one matrix of the model.
template <typename Loss>
Matrix numeric_grad(SkipGramModel& model, Matrix& target, Loss loss) {
  return finite_diff(
      [&](const Matrix& x) {
        const Matrix saved = target;
        target = x;
        const double v = loss(model);
        target = saved;
        return v;
      },
      target, 1e-6);
}

}  // namespace

TEST_CASE("pairs enumerates the window") {
  const std::vector<TokenId> ids{0, 1, 2};
  const auto p = pairs(ids, 1);
  const std::vector<std::pair<TokenId, TokenId>> expected{{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  CHECK(p == expected);
  CHECK(pairs(ids, 5).size() == 6);
  CHECK_THROWS_AS(pairs(ids, 0), ArgumentError);
}

TEST_CASE("full-softmax gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SkipGramModel m = random_model(7, 4, false, seed);
    const TokenId center = seed % 7, context = (seed * 3) % 7;
    const Gradients g = full_softmax_gradients(m, center, context);
    auto loss = [&](const SkipGramModel& s) { return full_softmax_loss(s, center, context); };
    CHECK(relative_error(g.input, numeric_grad(m, m.input_embedding(), loss)) < 1e-6);
    CHECK(relative_error(g.output, numeric_grad(m, m.output_embedding(), loss)) < 1e-6);
  }
  SkipGramModel tied = random_model(6, 3, true, 9);
  const Gradients g = full_softmax_gradients(tied, 2, 4);
  auto loss = [&](const SkipGramModel& s) { return full_softmax_loss(s, 2, 4); };
  CHECK(relative_error(g.shared, numeric_grad(tied, tied.input_embedding(), loss)) < 1e-6);
}

TEST_CASE("tied gradient is the sum of the two role gradients") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 3 + rng.below(8), h = 1 + rng.below(6);
    const SkipGramModel tied = random_model(c, h, true, rng.next());
    const SkipGramModel clone = tied.untied_clone();
    const auto center = static_cast<TokenId>(rng.below(c)), context = static_cast<TokenId>(rng.below(c));

    const Gradients gt = full_softmax_gradients(tied, center, context);
    const Gradients gu = full_softmax_gradients(clone, center, context);
    CHECK(max_abs_diff(gt.shared, gu.input + gu.output) <= 1e-12);

    const std::vector<TokenId> negs{static_cast<TokenId>(rng.below(c)), static_cast<TokenId>(rng.below(c))};
    const Gradients st = sgns_gradients(tied, center, context, negs);
    const Gradients su = sgns_gradients(clone, center, context, negs);
    CHECK(max_abs_diff(st.shared, su.input + su.output) <= 1e-12);
  }
}

TEST_CASE("tied storage is visible through both roles") {
  SkipGramModel m = random_model(4, 2, true, 5);
  m.output_embedding()(1, 1) = 42.0;
  CHECK(m.input_embedding()(1, 1) == 42.0);
  CHECK(m.param_count() == 8);
  CHECK(random_model(4, 2, false, 5).param_count() == 16);
}

TEST_CASE("full-softmax step lowers the pair loss at a small learning rate") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    SkipGramModel m = random_model(8, 5, trial % 2 == 0, rng.next());
    const auto center = static_cast<TokenId>(rng.below(8)), context = static_cast<TokenId>(rng.below(8));
    const double before = full_softmax_loss(m, center, context);
    CHECK(step_full_softmax(m, center, context, 1e-3) == doctest::Approx(before));
    CHECK(full_softmax_loss(m, center, context) < before);
  }
}

TEST_CASE("negative-sampling gradients match finite differences") {
  SkipGramModel m = random_model(9, 4, false, 17);
  const std::vector<TokenId> negs{3, 5, 5, 8};
  const Gradients g = sgns_gradients(m, 1, 2, negs);
  auto loss = [&](const SkipGramModel& s) { return sgns_loss(s, 1, 2, negs); };
  CHECK(relative_error(g.input, numeric_grad(m, m.input_embedding(), loss)) < 1e-5);
  CHECK(relative_error(g.output, numeric_grad(m, m.output_embedding(), loss)) < 1e-5);
}

TEST_CASE("negative-sampling step raises the positive score from zero") {
  SkipGramModel m(3, 2, false);
  m.input_embedding()(0, 0) = 1.0;
  m.output_embedding()(1, 1) = 1.0;  // sigma(v . u) = 0.5
  const auto u = m.input_embedding().row(0);
  const double before = dot(m.output_embedding().row(1), u);
  step_negative_sampling(m, 0, 1, {}, 0.1);
  CHECK(dot(m.output_embedding().row(1), m.input_embedding().row(0)) > before);
}

TEST_CASE("lr = 0 leaves the model unchanged") {
  SkipGramModel m = random_model(5, 3, false, 2);
  const Matrix u = m.input_embedding(), v = m.output_embedding();
  step_negative_sampling(m, 0, 1, std::vector<TokenId>{2, 3}, 0.0);
  step_full_softmax(m, 0, 1, 0.0);
  CHECK(m.input_embedding() == u);
  CHECK(m.output_embedding() == v);
}

TEST_CASE("untied negative sampling touches only the sampled output rows") {
  SkipGramModel m = random_model(6, 3, false, 4);
  const Matrix v = m.output_embedding();
  step_negative_sampling(m, 0, 1, std::vector<TokenId>{2}, 0.5);
  for (std::size_t k = 3; k < 6; ++k)
    for (std::size_t j = 0; j < 3; ++j) CHECK(m.output_embedding()(k, j) == v(k, j));
}

TEST_CASE("negative sampler follows the smoothed unigram") {
  const std::vector<std::uint64_t> counts{16, 1, 0, 81};
  const NegativeSampler s(counts, 0.75);
  const double z = 8.0 + 1.0 + 27.0;
  CHECK(s.probability(0) == doctest::Approx(8.0 / z));
  CHECK(s.probability(2) == 0.0);
  CHECK(s.probability(3) == doctest::Approx(27.0 / z));
  Rng rng(1);
  for (TokenId id : s.sample(rng, 200, 3)) {
    CHECK(id != 3);
    CHECK(id != 2);
  }
}

TEST_CASE("training is deterministic and lowers the loss") {
  std::vector<std::string> tokens;
  for (int i = 0; i < 300; ++i) {
    tokens.push_back(i % 2 ? "x" : "y");
    tokens.push_back(i % 3 ? "z" : "w");
  }
  const Vocabulary vocab = build_vocab(tokens, VocabPolicy::min_count(1));
  const auto ids = encode(tokens, vocab);
  TrainConfig cfg;
  cfg.window = 2;
  cfg.epochs = 3;
  cfg.learning_rate = 0.05;
  for (auto obj : {Objective::negative_sampling, Objective::full_softmax}) {
    cfg.objective = obj;
    SkipGramModel a = random_model(vocab.size(), 4, false, 7), b = random_model(vocab.size(), 4, false, 7);
    const auto ma = train(a, ids, vocab, cfg);
    const auto mb = train(b, ids, vocab, cfg);
    CHECK(a.input_embedding() == b.input_embedding());
    CHECK(ma.back().mean_loss < ma.front().mean_loss);
  }
}

TEST_CASE("export roles") {
  const Vocabulary vocab = build_vocab(std::vector<std::string>{"a", "b"}, VocabPolicy::min_count(1));
  const SkipGramModel untied = random_model(vocab.size(), 2, false, 1);
  CHECK(export_embedding(untied, vocab, EmbeddingRole::output).vectors() == untied.output_embedding());
  CHECK_THROWS_AS(export_embedding(untied, vocab, EmbeddingRole::tied), ArgumentError);
  const SkipGramModel tied = random_model(vocab.size(), 2, true, 1);
  CHECK(export_embedding(tied, vocab, EmbeddingRole::tied).vectors() == tied.input_embedding());
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "support/rank_oracle.hpp"
#include "wt/embed_eval.hpp"
#include "wt/errors.hpp"
#include "wt/random.hpp"

using namespace wt;

namespace {

Embedding random_embedding(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < n; ++i) tokens.push_back("w" + std::to_string(i));
  Matrix m(n, dim);
  fill_uniform(m, rng, 1.0);
  return Embedding(tokens, m);
}

std::vector<double> random_permutation(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 1.0);
  for (std::size_t i = n; i-- > 1;) std::swap(v[i], v[rng.below(i + 1)]);
  return v;
}

}  // namespace

TEST_CASE("cosine") {
  const std::vector<double> e1{1, 0}, e2{0, 1}, d{1, 1};
  CHECK(cosine(e1, e1) == doctest::Approx(1.0));
  CHECK(cosine(e1, e2) == 0.0);
  CHECK(cosine(d, e1) == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK_THROWS_AS(cosine(e1, std::vector<double>{0, 0}), NumericError);
  CHECK_THROWS_AS(cosine(e1, std::vector<double>{1, 0, 0}), ShapeError);
}

TEST_CASE("spearman basic cases") {
  const std::vector<double> xs{1, 2, 3, 4}, ys{1, 3, 2, 4};
  CHECK(spearman(xs, ys) == doctest::Approx(0.8));
  CHECK(spearman(xs, xs) == 1.0);
  const std::vector<double> rev{4, 3, 2, 1};
  CHECK(spearman(xs, rev) == -1.0);
  CHECK_THROWS_AS(spearman(xs, std::vector<double>{2, 2, 2, 2}), NumericError);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), ArgumentError);
  CHECK_THROWS_AS(spearman(xs, std::vector<double>{1, 2}), ArgumentError);
}

TEST_CASE("average ranks share ties") {
  const std::vector<double> xs{10, 20, 20, 5};
  CHECK(average_ranks(xs) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("spearman equals the d-squared formula on permutations") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    const auto xs = random_permutation(rng, n), ys = random_permutation(rng, n);
    CHECK(spearman(xs, ys) == testing::spearman_no_ties(xs, ys));
  }
}

TEST_CASE("spearman ignores strictly monotone transforms") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = rng.uniform(-2.0, 2.0);
      ys[i] = xs[i] + rng.uniform(-1.0, 1.0);
    }
    std::vector<double> tx(n);
    for (std::size_t i = 0; i < n; ++i) tx[i] = std::exp(3.0 * xs[i]) - 7.0;
    CHECK(spearman(tx, ys) == doctest::Approx(spearman(xs, ys)).epsilon(1e-12));
  }
}

TEST_CASE("eval_benchmark") {
  // Vectors at chosen angles so cosine similarities are known exactly.
  Matrix m(4, 2);
  const double angles[] = {0.0, 0.3, 0.9, 1.4};
  for (std::size_t i = 0; i < 4; ++i) {
    m(i, 0) = std::cos(angles[i]);
    m(i, 1) = std::sin(angles[i]);
  }
  const Embedding emb({"a", "b", "c", "d"}, m);
  std::vector<WordPair> pairs;
  const char* names[] = {"a", "b", "c", "d"};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) pairs.push_back({names[i], names[j], std::cos(angles[j] - angles[i])});
  pairs.push_back({"a", "zebra", 3.0});
  const EvalReport r = eval_benchmark(emb, WordPairDataset(pairs));
  CHECK(r.rho == doctest::Approx(1.0));
  CHECK(r.pairs_used == 6);
  CHECK(r.pairs_skipped_oov == 1);
  CHECK(r.pairs_used + r.pairs_skipped_oov == pairs.size());
  CHECK(format_report(r).starts_with("rho="));

  Matrix scaled = m;
  scaled(0, 0) *= 5.0;
  scaled(0, 1) *= 5.0;
  scaled(2, 0) *= 0.1;
  scaled(2, 1) *= 0.1;
  CHECK(eval_benchmark(Embedding({"a", "b", "c", "d"}, scaled), WordPairDataset(pairs)).rho == doctest::Approx(r.rho));

  CHECK_THROWS_AS(eval_benchmark(emb, WordPairDataset({{"x", "y", 1.0}, {"y", "z", 2.0}})), NumericError);
}

TEST_CASE("word pair datasets reject duplicates and bad scores") {
  CHECK_THROWS_AS(WordPairDataset({{"a", "b", 1.0}, {"b", "a", 2.0}}), ArgumentError);
  CHECK_THROWS_AS(WordPairDataset({{"a", "b", NAN}}), ArgumentError);
}

TEST_CASE("read_word_pairs detects a header") {
  const auto path = std::filesystem::temp_directory_path() / "wt_pairs.tsv";
  {
    std::ofstream out(path);
    out << "word1\tword2\tSimLex999\nold\tnew\t1.58\nsmart\tintelligent\t9.2\n";
  }
  const auto data = read_word_pairs(path);
  REQUIRE(data.size() == 2);
  CHECK(data.pairs()[1].b == "intelligent");
  CHECK(data.pairs()[1].score == 9.2);
  {
    std::ofstream out(path);
    out << "old new 1.58\nsmart intelligent nine\n";
  }
  CHECK_THROWS_AS(read_word_pairs(path), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("distance_correlation") {
  Rng rng(14);
  const Embedding a = random_embedding(rng, 12, 5);
  const Embedding b = random_embedding(rng, 12, 5);
  const auto& words = a.tokens();
  CHECK(distance_correlation(a, a, words) == doctest::Approx(1.0));
  CHECK(distance_correlation(a, Embedding(a.tokens(), 2.0 * a.vectors()), words) == doctest::Approx(1.0));
  CHECK(distance_correlation(a, b, words) == doctest::Approx(distance_correlation(b, a, words)));

  const std::vector<std::string> missing{"w0", "w1", "nope"};
  try {
    (void)distance_correlation(a, b, missing);
    FAIL("expected ArgumentError");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
  const std::vector<std::string> two{"w0", "w1"};
  CHECK_THROWS_AS(distance_correlation(a, b, two), ArgumentError);
}

TEST_CASE("shared_words keeps frequency order") {
  Rng rng(1);
  const Embedding a = random_embedding(rng, 5, 2);
  const std::vector<std::string> freq{"w3", "x", "w1", "w0", "w4"};
  const Embedding* embs[] = {&a};
  CHECK(shared_words(freq, embs, 3) == std::vector<std::string>{"w3", "w1", "w0"});
  CHECK(shared_words(freq, embs, 0).size() == 4);
}

TEST_CASE("embedding text format round trip") {
  Rng rng(2);
  const Embedding a = random_embedding(rng, 6, 3);
  const auto path = std::filesystem::temp_directory_path() / "wt_embedding.txt";
  write_embedding(a, path);
  const Embedding b = read_embedding(path);
  CHECK(b.tokens() == a.tokens());
  CHECK(max_abs_diff(a.vectors(), b.vectors()) < 1e-8);
  std::filesystem::remove(path);
  CHECK(parse_embedding_role("tied") == EmbeddingRole::tied);
  CHECK_THROWS_AS(parse_embedding_role("hidden"), ConfigError);
}

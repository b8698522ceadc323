#include <doctest.h>

#include <filesystem>
#include <map>

#include "support/synthetic.hpp"
#include "wt/corpus.hpp"
#include "wt/errors.hpp"
#include "wt/random.hpp"
#include "wt/vocabulary.hpp"

using namespace wt;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> ws) { return {ws.begin(), ws.end()}; }

std::vector<TokenId> iota_ids(std::size_t n) {
  std::vector<TokenId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<TokenId>(i);
  return ids;
}

}  // namespace

TEST_CASE("build_vocab with min-count") {
  const auto stream = words({"a", "a", "b"});
  const Vocabulary v = build_vocab(stream, VocabPolicy::min_count(2));
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.id("b") == v.unk_id());
  CHECK(v.count(v.unk_id()) == 1);
  CHECK(v.size() == 3);

  const Vocabulary all = build_vocab(stream, VocabPolicy::min_count(1));
  CHECK(all.contains("a"));
  CHECK(all.contains("b"));
  CHECK_THROWS_AS(build_vocab(std::vector<std::string>{}, VocabPolicy::min_count(1)), ArgumentError);
}

TEST_CASE("build_vocab orders by count then lexicographically") {
  const auto stream = words({"c", "b", "b", "a", "a", "d"});
  const Vocabulary v = build_vocab(stream, VocabPolicy::min_count(1));
  CHECK(v.id("a") < v.id("b"));
  CHECK(v.id("b") < v.id("c"));
  CHECK(v.id("c") < v.id("d"));
  CHECK(v.id("a") == 0);
}

TEST_CASE("build_vocab with max-size keeps the most frequent") {
  const auto stream = words({"x", "x", "x", "y", "y", "z"});
  const Vocabulary v = build_vocab(stream, VocabPolicy::max_size(4));
  CHECK(v.size() == 4);
  CHECK(v.contains("x"));
  CHECK(v.contains("y"));
  CHECK_FALSE(v.contains("z"));
}

TEST_CASE("vocabulary size matches an independent count") {
  testing::ClassMarkovParams params;
  params.num_classes = 10;
  params.words_per_class = 80;
  params.zipf_exponent = 1.1;
  testing::ClassMarkovSource source(params);
  const auto stream = source.generate(10000);

  std::map<std::string, int> counts;
  for (const auto& w : stream) ++counts[w];
  std::size_t kept = 0;
  for (const auto& [w, n] : counts) kept += n >= 5 ? 1 : 0;

  const Vocabulary v = build_vocab(stream, VocabPolicy::min_count(5));
  CHECK(v.size() == kept + 2);
}

TEST_CASE("vocabulary ids and tokens are mutual inverses") {
  const auto stream = words({"the", "cat", "sat", "on", "the", "mat", "<unk>", "<eos>"});
  const Vocabulary v = build_vocab(stream, VocabPolicy::min_count(1));
  for (TokenId id = 0; id < v.size(); ++id) CHECK(v.id(v.token(id)) == id);
  CHECK(v.token(v.unk_id()) == "<unk>");
  CHECK(v.token(v.eos_id()) == "<eos>");
  CHECK_THROWS_AS(Vocabulary::from_entries({{"a", 1}, {"a", 2}}), ArgumentError);
}

TEST_CASE("vocabulary file round trip") {
  const auto stream = words({"b", "a", "a", "c"});
  const Vocabulary v = build_vocab(stream, VocabPolicy::min_count(1));
  const auto path = std::filesystem::temp_directory_path() / "wt_vocab_roundtrip.tsv";
  write_vocab(v, path);
  CHECK(read_vocab(path) == v);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_vocab(path), IoError);
}

TEST_CASE("union_vocab sums counts") {
  const Vocabulary a = build_vocab(words({"x", "x", "y"}), VocabPolicy::min_count(1));
  const Vocabulary b = build_vocab(words({"y", "y", "z"}), VocabPolicy::min_count(1));
  const Vocabulary u = union_vocab(a, b);
  CHECK(u.count(u.id("y")) == 3);
  CHECK(u.id("y") == 0);
  CHECK(u.contains("x"));
  CHECK(u.contains("z"));
}

TEST_CASE("encode and decode") {
  const Vocabulary v = build_vocab(words({"a"}), VocabPolicy::min_count(1));
  const auto ids = encode(words({"a", "zzz"}), v);
  CHECK(ids == std::vector<TokenId>{v.id("a"), v.unk_id()});
  CHECK(encode(std::vector<std::string>{}, v).empty());

  const auto sentence = words({"the", "cat", "sat"});
  const Vocabulary full = build_vocab(sentence, VocabPolicy::min_count(1));
  CHECK(decode(encode(sentence, full), full) == sentence);
}

TEST_CASE("tokenize_lines appends eos only in sentence mode") {
  const std::vector<std::string> lines{"a b", "  c  "};
  CHECK(tokenize_lines(lines, CorpusMode::sentences) == words({"a", "b", "<eos>", "c", "<eos>"}));
  CHECK(tokenize_lines(lines, CorpusMode::stream) == words({"a", "b", "c"}));
  CHECK(parse_corpus_mode("stream") == CorpusMode::stream);
  CHECK_THROWS_AS(parse_corpus_mode("words"), ConfigError);
}

TEST_CASE("batchify with one lane") {
  const auto batches = batchify(iota_ids(10), 1, 3);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].inputs == std::vector<TokenId>{0, 1, 2});
  CHECK(batches[1].inputs == std::vector<TokenId>{3, 4, 5});
  CHECK(batches[2].inputs == std::vector<TokenId>{6, 7, 8});
  CHECK(batches[0].targets == std::vector<TokenId>{1, 2, 3});
  CHECK(batches[2].targets == std::vector<TokenId>{7, 8, 9});
}

TEST_CASE("batchify splits the stream into contiguous lanes") {
  const auto batches = batchify(iota_ids(20), 2, 4);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].input(0, 0) == 0);
  CHECK(batches[0].input(1, 0) == 10);
  CHECK(batches[1].input(0, 0) == 4);
  CHECK(batches[1].input(1, 0) == 14);
  CHECK_THROWS_AS(batchify(iota_ids(9), 2, 4), ArgumentError);
}

TEST_CASE("batch targets are stream successors and lanes continue") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t batch = 1 + rng.below(5), seq = 1 + rng.below(8);
    const std::size_t n = batch * (seq + 1) + rng.below(200);
    std::vector<TokenId> stream(n);
    for (auto& t : stream) t = static_cast<TokenId>(rng.below(1000));
    const auto batches = batchify(stream, batch, seq);
    const std::size_t lane = n / batch;
    CHECK(batch * seq * batches.size() <= n - 1);
    for (std::size_t k = 0; k < batches.size(); ++k)
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < seq; ++t) {
          const std::size_t pos = b * lane + k * seq + t;
          CHECK(batches[k].input(b, t) == stream[pos]);
          CHECK(batches[k].target(b, t) == stream[pos + 1]);
        }
  }
}

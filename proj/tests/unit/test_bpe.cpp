#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "support/bpe_oracle.hpp"
#include "wt/bpe.hpp"
#include "wt/errors.hpp"

using namespace wt;
using namespace wt::bpe;

TEST_CASE("zero merges segments into characters") {
  const MergeTable table = learn_bpe({{"low", 5}}, 0);
  CHECK(table.empty());
  CHECK(apply_bpe("low", table) == std::vector<std::string>{"l@@", "o@@", "w"});
  CHECK(apply_bpe("", table).empty());
  CHECK_THROWS_AS(learn_bpe({}, 3), ArgumentError);
}

TEST_CASE("learn_bpe on the low/lowest example") {
  const WordFrequencies table{{"low", 5}, {"lowest", 2}};
  const MergeTable merges = learn_bpe(table, 2);
  REQUIRE(merges.size() == 2);
  CHECK(merges.merges()[0] == SymbolPair{"l", "o"});
  CHECK(merges.merges() == testing::exhaustive_bpe(table, 2));
  CHECK(apply_bpe("low", learn_bpe(table, 10)) == std::vector<std::string>{"low"});
}

TEST_CASE("learn_bpe stops when no pair repeats") {
  const MergeTable merges = learn_bpe({{"abc", 1}, {"xyz", 1}}, 10);
  CHECK(merges.empty());
}

TEST_CASE("learn_bpe agrees with the exhaustive oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto table = testing::random_word_table(rng, 30, "abcde");
    const std::size_t n = 1 + rng.below(40);
    CHECK(learn_bpe(table, n).merges() == testing::exhaustive_bpe(table, n));
  }
}

TEST_CASE("learning on a union equals learning on the concatenation") {
  const std::vector<std::string> a{"the cat sat", "the hat"};
  const std::vector<std::string> b{"a cat ate the hat", "that cat"};
  std::vector<std::string> both = a;
  both.insert(both.end(), b.begin(), b.end());
  CHECK(learn_bpe(merge_frequencies(count_words(a), count_words(b)), 20) == learn_bpe(count_words(both), 20));
}

TEST_CASE("learn_bpe is deterministic") {
  Rng rng(4);
  const auto table = testing::random_word_table(rng, 100, "abcdefg");
  CHECK(learn_bpe(table, 50) == learn_bpe(table, 50));
}

TEST_CASE("segmentation is lossless") {
  Rng rng(8);
  const auto table = testing::random_word_table(rng, 200, "abcdef");
  const MergeTable merges = learn_bpe(table, 80);
  for (int i = 0; i < 2000; ++i) {
    const std::string w = testing::random_word(rng, "abcdefgh", 12);
    CHECK(join_subwords(apply_bpe(w, merges)) == w);
  }
  CHECK(join_subwords(apply_bpe("naïve", merges)) == "naïve");
  CHECK(apply_bpe("ü", merges) == std::vector<std::string>{"ü"});
}

TEST_CASE("longer merge tables never lengthen a segmentation") {
  Rng rng(6);
  const MergeTable merges = learn_bpe(testing::random_word_table(rng, 150, "abcd"), 60);
  for (int i = 0; i < 200; ++i) {
    const std::string w = testing::random_word(rng, "abcd", 10);
    std::size_t previous = w.size();
    for (std::size_t k = 0; k <= merges.size(); ++k) {
      const std::size_t len = apply_bpe(w, merges.prefix(k)).size();
      CHECK(len <= previous);
      previous = len;
    }
  }
}

TEST_CASE("line segmentation and desegmentation") {
  const MergeTable merges = learn_bpe(count_words(std::vector<std::string>{"lower lowest low low"}), 5);
  const std::string line = "lowest lower slow";
  const std::string seg = apply_bpe_line(line, merges);
  CHECK(seg.find("@@ ") != std::string::npos);
  CHECK(desegment_line(seg) == line);
}

TEST_CASE("merge tables reject duplicates") {
  MergeTable t;
  t.add("a", "b");
  CHECK_THROWS_AS(t.add("a", "b"), ArgumentError);
  CHECK(t.rank("a", "b") == 0u);
  CHECK_FALSE(t.rank("b", "a").has_value());
}

TEST_CASE("merge file round trip") {
  Rng rng(12);
  const MergeTable merges = learn_bpe(testing::random_word_table(rng, 50, "abcxyz"), 30);
  const auto path = std::filesystem::temp_directory_path() / "wt_merges.txt";
  write_merge_table(merges, path);
  CHECK(read_merge_table(path) == merges);
  {
    std::ofstream out(path);
    out << "a b\n";
  }
  CHECK_THROWS_AS(read_merge_table(path), IoError);
  {
    std::ofstream out(path);
    out << "#version: 0.2 continuation: @@ end-of-word: </w>\na b\na b\n";
  }
  CHECK_THROWS_AS(read_merge_table(path), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("vocab_overlap") {
  const std::set<std::string> v{"a", "b", "c"};
  CHECK(vocab_overlap(v, v) == OverlapReport{0, 0, 3});
  CHECK(vocab_overlap(v, {"x", "y"}) == OverlapReport{3, 2, 0});

  Rng rng(30);
  for (int trial = 0; trial < 100; ++trial) {
    std::set<std::string> s, t;
    for (int i = 0; i < 40; ++i) {
      s.insert(testing::random_word(rng, "abc", 3));
      t.insert(testing::random_word(rng, "abc", 3));
    }
    std::vector<std::string> inter, uni, s_only, t_only;
    std::set_intersection(s.begin(), s.end(), t.begin(), t.end(), std::back_inserter(inter));
    std::set_union(s.begin(), s.end(), t.begin(), t.end(), std::back_inserter(uni));
    std::set_difference(s.begin(), s.end(), t.begin(), t.end(), std::back_inserter(s_only));
    std::set_difference(t.begin(), t.end(), s.begin(), s.end(), std::back_inserter(t_only));
    const OverlapReport r = vocab_overlap(s, t);
    CHECK(r.shared == inter.size());
    CHECK(r.only_source == s_only.size());
    CHECK(r.only_target == t_only.size());
    CHECK(r.union_size() == uni.size());
  }
}

TEST_CASE("subword_vocab collects distinct tokens") {
  const std::vector<std::string> lines{"lo@@ w", "lo@@ west w"};
  CHECK(subword_vocab(lines) == std::set<std::string>{"lo@@", "w", "west"});
}

#include <doctest.h>

#include <filesystem>
#include <string>

#include "wt/checkpoint.hpp"
#include "wt/errors.hpp"

using namespace wt;

namespace {

Vocabulary make_vocab(std::size_t n) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (std::size_t i = 0; i + 2 < n; ++i) entries.emplace_back("w" + std::to_string(i), 100 - i);
  entries.emplace_back(std::string(kUnkToken), 3);
  entries.emplace_back(std::string(kEosToken), 2);
  return Vocabulary::from_entries(std::move(entries));
}

lm::LanguageModel make_lm(bool tied, bool projection) {
  lm::LmConfig c;
  c.vocab_size = 7;
  c.hidden = 3;
  c.tied = tied;
  c.projection = projection;
  c.dropout = 0.3;
  c.lambda = 0.15;
  lm::LanguageModel m(c);
  Rng rng(5);
  m.init_uniform(rng, 0.7);
  return m;
}

nmt::NmtModel make_nmt(nmt::Tying tying, std::size_t cs, std::size_t ct) {
  nmt::NmtConfig c;
  c.source_vocab = cs;
  c.target_vocab = ct;
  c.embed = 3;
  c.hidden = 2;
  c.tying = tying;
  c.eos = 1;
  nmt::NmtModel m(c);
  Rng rng(6);
  m.init_uniform(rng, 0.7);
  return m;
}

template <class Named>
void check_float_rounded(const Named& original, const Named& loaded) {
  REQUIRE(original.size() == loaded.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CAPTURE(original[i].first);
    REQUIRE(original[i].second->same_shape(*loaded[i].second));
    for (std::size_t k = 0; k < original[i].second->size(); ++k)
      CHECK((*loaded[i].second)[k] == static_cast<double>(static_cast<float>((*original[i].second)[k])));
  }
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("wt_ckpt_" + name);
}

}  // namespace

TEST_CASE("header layout is little-endian") {
  const std::string bytes = serialize(make_lm(false, false), make_vocab(7));
  REQUIRE(bytes.size() > 16);
  CHECK(bytes.substr(0, 4) == "WTCK");
  CHECK(bytes.substr(4, 4) == std::string("\x01\x00\x00\x00", 4));
  CHECK(bytes.substr(8, 4) == std::string("\x01\x00\x00\x00", 4));
  CHECK(bytes.substr(12, 4) == std::string("\x07\x00\x00\x00", 4));
  CHECK(peek_kind(bytes) == CheckpointKind::lm);
}

TEST_CASE("language model round trip is bit exact") {
  for (bool tied : {false, true})
    for (bool proj : {false, true}) {
      const lm::LanguageModel m = make_lm(tied, proj);
      const Vocabulary v = make_vocab(7);
      const std::string bytes = serialize(m, v);
      const LmCheckpoint c = parse_lm(bytes);
      CHECK(serialize(c.model, c.vocab) == bytes);
      CHECK(c.vocab == v);
      CHECK(c.model.config().tied == tied);
      CHECK(c.model.config().projection == proj);
      CHECK(c.model.config().dropout == 0.3);
      CHECK(c.model.config().lambda == 0.15);
      check_float_rounded(m.params().named(), c.model.params().named());
    }
}

TEST_CASE("skip-gram round trip is bit exact") {
  for (bool tied : {false, true}) {
    skipgram::SkipGramModel m(6, 4, tied);
    Rng rng(2);
    m.init_uniform(rng, 1.0);
    const std::string bytes = serialize(m, make_vocab(6));
    const SkipGramCheckpoint c = parse_skipgram(bytes);
    CHECK(serialize(c.model, c.vocab) == bytes);
    CHECK(c.model.tied() == tied);
    CHECK(c.model.output_embedding()(5, 3) == static_cast<double>(static_cast<float>(m.output_embedding()(5, 3))));
  }
}

TEST_CASE("translation model round trip keeps the tying mode and vocabularies") {
  const Vocabulary src = make_vocab(6);
  const Vocabulary tgt = make_vocab(8);
  for (nmt::Tying t : {nmt::Tying::none, nmt::Tying::decoder}) {
    const nmt::NmtModel m = make_nmt(t, 6, 8);
    const std::string bytes = serialize(m, src, tgt);
    const NmtCheckpoint c = parse_nmt(bytes);
    CHECK(serialize(c.model, c.source_vocab, c.target_vocab) == bytes);
    CHECK(c.model.tying() == t);
    CHECK(c.source_vocab == src);
    CHECK(c.target_vocab == tgt);
    check_float_rounded(m.params().named(), c.model.params().named());
  }
  const Vocabulary uni = union_vocab(src, tgt);
  const nmt::NmtModel m = make_nmt(nmt::Tying::three_way, uni.size(), uni.size());
  const std::string bytes = serialize(m, uni, uni);
  const NmtCheckpoint c = parse_nmt(bytes);
  CHECK(c.source_vocab == uni);
  CHECK(c.target_vocab == uni);
  CHECK(serialize(c.model, c.source_vocab, c.target_vocab) == bytes);
  CHECK_THROWS_AS(serialize(m, uni, make_vocab(uni.size())), ArgumentError);
}

TEST_CASE("every truncation is rejected") {
  const std::string bytes = serialize(make_nmt(nmt::Tying::decoder, 4, 5), make_vocab(4), make_vocab(5));
  for (std::size_t n = 0; n < bytes.size(); ++n) CHECK_THROWS_AS(parse_nmt(bytes.substr(0, n)), IoError);
  CHECK_THROWS_AS(parse_nmt(bytes + "x"), IoError);
}

TEST_CASE("malformed containers are rejected") {
  const std::string bytes = serialize(make_lm(true, false), make_vocab(7));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse_lm(bad), IoError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(parse_lm(bad), IoError);
  CHECK_THROWS_AS(parse_skipgram(bytes), IoError);
  CHECK_THROWS_AS(parse_nmt(bytes), IoError);
  bad = bytes;
  bad[8] = 9;
  CHECK_THROWS_AS(peek_kind(bad), IoError);
  bad = bytes;
  bad[24] = 2;  // tied flag
  CHECK_THROWS_AS(parse_lm(bad), IoError);
  CHECK_THROWS_AS(serialize(make_lm(true, false), make_vocab(6)), ArgumentError);
}

TEST_CASE("files and embedding roles") {
  const auto path = temp_path("lm.bin");
  const lm::LanguageModel m = make_lm(false, false);
  const Vocabulary v = make_vocab(7);
  save_checkpoint(path, m, v);
  CHECK(checkpoint_kind(path) == CheckpointKind::lm);
  CHECK(read_bytes(path) == serialize(m, v));
  const Embedding in = checkpoint_embedding(path, EmbeddingRole::input);
  const Embedding out = checkpoint_embedding(path, EmbeddingRole::output);
  CHECK(in.tokens() == v.tokens());
  CHECK(in.vectors()(2, 1) == static_cast<double>(static_cast<float>(m.input_embedding()(2, 1))));
  CHECK(out.vectors()(2, 1) == static_cast<double>(static_cast<float>(m.output_embedding()(2, 1))));
  CHECK_THROWS_AS(checkpoint_embedding(path, EmbeddingRole::tied), ArgumentError);

  const auto npath = temp_path("nmt.bin");
  save_checkpoint(npath, make_nmt(nmt::Tying::none, 4, 4), make_vocab(4), make_vocab(4));
  CHECK_THROWS_AS(checkpoint_embedding(npath, EmbeddingRole::input), ArgumentError);
  CHECK_THROWS_AS(load_lm(npath), IoError);

  std::filesystem::remove(path);
  std::filesystem::remove(npath);
  CHECK_THROWS_AS(load_lm(path), IoError);
}

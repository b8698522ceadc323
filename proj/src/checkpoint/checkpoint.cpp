#include "wt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "wt/errors.hpp"

namespace wt {

namespace {

constexpr std::string_view kMagic = "WTCK";

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void size(std::size_t v) {
    if (v > UINT32_MAX) throw IoError("checkpoint: value " + std::to_string(v) + " exceeds 32 bits");
    u32(static_cast<std::uint32_t>(v));
  }
  void bytes(std::string_view s) {
    size(s.size());
    out_.append(s);
  }

  void header(CheckpointKind kind) {
    out_.append(kMagic);
    u32(kCheckpointVersion);
    u32(static_cast<std::uint32_t>(kind));
  }

  void vocab(const Vocabulary& v) {
    size(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      bytes(v.tokens()[i]);
      u64(v.counts()[i]);
    }
  }

  void matrices(const std::vector<std::pair<std::string, const Matrix*>>& named) {
    std::size_t n = 0;
    for (const auto& [name, m] : named) n += !m->empty();
    size(n);
    for (const auto& [name, m] : named) {
      if (m->empty()) continue;
      bytes(name);
      size(m->rows());
      size(m->cols());
      for (double v : m->values()) f32(static_cast<float>(v));
    }
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool flag() {
    const std::uint8_t v = u8();
    if (v > 1) throw IoError("checkpoint: flag byte " + std::to_string(v) + " is not 0 or 1");
    return v == 1;
  }
  std::string bytes() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  CheckpointKind header() {
    need(kMagic.size());
    if (in_.substr(0, kMagic.size()) != kMagic) throw IoError("checkpoint: bad magic");
    pos_ = kMagic.size();
    const std::uint32_t version = u32();
    if (version != kCheckpointVersion)
      throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    const std::uint32_t kind = u32();
    if (kind < 1 || kind > 3) throw IoError("checkpoint: unknown kind " + std::to_string(kind));
    return static_cast<CheckpointKind>(kind);
  }

  void expect(CheckpointKind kind) {
    const CheckpointKind got = header();
    if (got != kind) throw IoError("checkpoint: expected a " + to_string(kind) + " checkpoint, found " + to_string(got));
  }

  Vocabulary vocab() {
    const std::uint32_t n = u32();
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    entries.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string token = bytes();
      const std::uint64_t count = u64();
      entries.emplace_back(std::move(token), count);
    }
    Vocabulary v;
    try {
      v = Vocabulary::from_entries(std::move(entries));
    } catch (const std::exception& e) {
      throw IoError(std::string("checkpoint: bad vocabulary block: ") + e.what());
    }
    if (v.size() != n) throw IoError("checkpoint: vocabulary block lacks <unk> or <eos>");
    return v;
  }

  void matrices(const std::vector<std::pair<std::string, Matrix*>>& named) {
    std::size_t expected = 0;
    for (const auto& [name, m] : named) expected += !m->empty();
    const std::uint32_t n = u32();
    if (n != expected)
      throw IoError("checkpoint: " + std::to_string(n) + " matrices, expected " + std::to_string(expected));
    for (const auto& [name, m] : named) {
      if (m->empty()) continue;
      const std::string got = bytes();
      if (got != name) throw IoError("checkpoint: matrix '" + got + "' where '" + name + "' was expected");
      const std::uint32_t rows = u32();
      const std::uint32_t cols = u32();
      if (rows != m->rows() || cols != m->cols())
        throw IoError("checkpoint: matrix '" + name + "' is " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", expected " + m->shape_string());
      for (double& v : m->values()) v = static_cast<double>(f32());
    }
  }

  void finish() const {
    if (pos_ != in_.size()) throw IoError("checkpoint: " + std::to_string(in_.size() - pos_) + " trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw IoError("checkpoint: truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

std::vector<std::pair<std::string, const Matrix*>> skipgram_matrices(const skipgram::SkipGramModel& m) {
  std::vector<std::pair<std::string, const Matrix*>> out{{"input", &m.input_embedding()}};
  if (!m.tied()) out.emplace_back("output", &m.output_embedding());
  return out;
}

template <class Config>
Config checked(Config c) {
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw IoError(std::string("checkpoint: invalid header: ") + e.what());
  }
  return c;
}

}  // namespace

std::string to_string(CheckpointKind kind) {
  switch (kind) {
    case CheckpointKind::lm: return "lm";
    case CheckpointKind::skipgram: return "skipgram";
    case CheckpointKind::nmt: return "nmt";
  }
  return "unknown";
}

std::string serialize(const lm::LanguageModel& model, const Vocabulary& vocab) {
  if (vocab.size() != model.vocab_size()) throw ArgumentError("checkpoint: vocabulary size mismatch");
  const lm::LmConfig& c = model.config();
  Writer w;
  w.header(CheckpointKind::lm);
  w.size(c.vocab_size);
  w.size(c.hidden);
  w.size(c.num_layers);
  w.u8(c.tied);
  w.u8(c.projection);
  w.f64(c.dropout);
  w.f64(c.lambda);
  w.vocab(vocab);
  w.matrices(model.params().named());
  return w.take();
}

std::string serialize(const skipgram::SkipGramModel& model, const Vocabulary& vocab) {
  if (vocab.size() != model.vocab_size()) throw ArgumentError("checkpoint: vocabulary size mismatch");
  Writer w;
  w.header(CheckpointKind::skipgram);
  w.size(model.vocab_size());
  w.size(model.dim());
  w.u8(model.tied());
  w.vocab(vocab);
  w.matrices(skipgram_matrices(model));
  return w.take();
}

std::string serialize(const nmt::NmtModel& model, const Vocabulary& source_vocab, const Vocabulary& target_vocab) {
  const nmt::NmtConfig& c = model.config();
  if (source_vocab.size() != c.source_vocab || target_vocab.size() != c.target_vocab)
    throw ArgumentError("checkpoint: vocabulary size mismatch");
  const bool shared = c.tying == nmt::Tying::three_way;
  if (shared && !(source_vocab == target_vocab))
    throw ArgumentError("checkpoint: three-way tying needs one shared vocabulary");
  Writer w;
  w.header(CheckpointKind::nmt);
  w.size(c.source_vocab);
  w.size(c.target_vocab);
  w.size(c.embed);
  w.size(c.hidden);
  w.u8(static_cast<std::uint8_t>(c.tying));
  w.u32(c.eos);
  w.vocab(source_vocab);
  if (!shared) w.vocab(target_vocab);
  w.matrices(model.params().named());
  return w.take();
}

CheckpointKind peek_kind(std::string_view bytes) { return Reader(bytes).header(); }

LmCheckpoint parse_lm(std::string_view bytes) {
  Reader r(bytes);
  r.expect(CheckpointKind::lm);
  lm::LmConfig c;
  c.vocab_size = r.u32();
  c.hidden = r.u32();
  c.num_layers = r.u32();
  c.tied = r.flag();
  c.projection = r.flag();
  c.dropout = r.f64();
  c.lambda = r.f64();
  LmCheckpoint out{r.vocab(), lm::LanguageModel(checked(c))};
  if (out.vocab.size() != c.vocab_size) throw IoError("checkpoint: vocabulary block size differs from the header");
  r.matrices(out.model.params().named());
  r.finish();
  return out;
}

SkipGramCheckpoint parse_skipgram(std::string_view bytes) {
  Reader r(bytes);
  r.expect(CheckpointKind::skipgram);
  const std::size_t vocab_size = r.u32();
  const std::size_t dim = r.u32();
  const bool tied = r.flag();
  if (vocab_size == 0 || dim == 0) throw IoError("checkpoint: empty skip-gram model");
  SkipGramCheckpoint out{r.vocab(), skipgram::SkipGramModel(vocab_size, dim, tied)};
  if (out.vocab.size() != vocab_size) throw IoError("checkpoint: vocabulary block size differs from the header");
  std::vector<std::pair<std::string, Matrix*>> named{{"input", &out.model.input_embedding()}};
  if (!tied) named.emplace_back("output", &out.model.output_embedding());
  r.matrices(named);
  r.finish();
  return out;
}

NmtCheckpoint parse_nmt(std::string_view bytes) {
  Reader r(bytes);
  r.expect(CheckpointKind::nmt);
  nmt::NmtConfig c;
  c.source_vocab = r.u32();
  c.target_vocab = r.u32();
  c.embed = r.u32();
  c.hidden = r.u32();
  const std::uint8_t tying = r.u8();
  if (tying > 2) throw IoError("checkpoint: unknown tying mode " + std::to_string(tying));
  c.tying = static_cast<nmt::Tying>(tying);
  c.eos = r.u32();
  checked(c);
  Vocabulary source = r.vocab();
  Vocabulary target = c.tying == nmt::Tying::three_way ? source : r.vocab();
  if (source.size() != c.source_vocab || target.size() != c.target_vocab)
    throw IoError("checkpoint: vocabulary block size differs from the header");
  NmtCheckpoint out{std::move(source), std::move(target), nmt::NmtModel(c)};
  r.matrices(out.model.params().named());
  r.finish();
  return out;
}

void write_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_checkpoint(const std::filesystem::path& path, const lm::LanguageModel& model, const Vocabulary& vocab) {
  write_bytes(path, serialize(model, vocab));
}

void save_checkpoint(const std::filesystem::path& path, const skipgram::SkipGramModel& model,
                     const Vocabulary& vocab) {
  write_bytes(path, serialize(model, vocab));
}

void save_checkpoint(const std::filesystem::path& path, const nmt::NmtModel& model, const Vocabulary& source_vocab,
                     const Vocabulary& target_vocab) {
  write_bytes(path, serialize(model, source_vocab, target_vocab));
}

CheckpointKind checkpoint_kind(const std::filesystem::path& path) { return peek_kind(read_bytes(path)); }

LmCheckpoint load_lm(const std::filesystem::path& path) { return parse_lm(read_bytes(path)); }

SkipGramCheckpoint load_skipgram(const std::filesystem::path& path) { return parse_skipgram(read_bytes(path)); }

NmtCheckpoint load_nmt(const std::filesystem::path& path) { return parse_nmt(read_bytes(path)); }

Embedding checkpoint_embedding(const std::filesystem::path& path, EmbeddingRole role) {
  const std::string bytes = read_bytes(path);
  switch (peek_kind(bytes)) {
    case CheckpointKind::lm: {
      const LmCheckpoint c = parse_lm(bytes);
      return lm::export_embedding(c.model, c.vocab, role);
    }
    case CheckpointKind::skipgram: {
      const SkipGramCheckpoint c = parse_skipgram(bytes);
      return skipgram::export_embedding(c.model, c.vocab, role);
    }
    case CheckpointKind::nmt: break;
  }
  throw ArgumentError("checkpoint '" + path.string() + "' holds an nmt model; embeddings come from lm or skipgram");
}

}  // namespace wt

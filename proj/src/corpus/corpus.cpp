#include "wt/corpus.hpp"

#include <fstream>

#include "wt/errors.hpp"

namespace wt {

CorpusMode parse_corpus_mode(const std::string& name) {
  if (name == "sentences") return CorpusMode::sentences;
  if (name == "stream") return CorpusMode::stream;
  throw ConfigError("corpus_mode", "expected 'sentences' or 'stream', got '" + name + "'");
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> tokenize_lines(std::span<const std::string> lines, CorpusMode mode) {
  std::vector<std::string> tokens;
  for (const auto& line : lines) {
    auto words = split_whitespace(line);
    if (mode == CorpusMode::sentences && words.empty()) continue;
    tokens.insert(tokens.end(), std::make_move_iterator(words.begin()),
                  std::make_move_iterator(words.end()));
    if (mode == CorpusMode::sentences) tokens.emplace_back(kEosToken);
  }
  return tokens;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> read_tokens(const std::filesystem::path& path, CorpusMode mode) {
  const auto lines = read_lines(path);
  return tokenize_lines(lines, mode);
}

std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) tokens.push_back(vocab.token(id));
  return tokens;
}

std::vector<BpttBatch> batchify(std::span<const TokenId> ids, std::size_t batch_size,
                                std::size_t seq_len) {
  if (batch_size == 0 || seq_len == 0) throw ArgumentError("batchify: batch size and seq-len must be positive");
  if (ids.size() < batch_size * (seq_len + 1)) {
    throw ArgumentError("batchify: stream of " + std::to_string(ids.size()) +
                        " tokens is too short for batch " + std::to_string(batch_size) +
                        " x seq-len " + std::to_string(seq_len));
  }
  const std::size_t lane_len = ids.size() / batch_size;
  const std::size_t num_batches = (lane_len - 1) / seq_len;
  std::vector<BpttBatch> batches(num_batches);
  for (std::size_t k = 0; k < num_batches; ++k) {
    BpttBatch& batch = batches[k];
    batch.batch_size = batch_size;
    batch.seq_len = seq_len;
    batch.inputs.resize(batch_size * seq_len);
    batch.targets.resize(batch_size * seq_len);
    for (std::size_t b = 0; b < batch_size; ++b) {
      const std::size_t base = b * lane_len + k * seq_len;
      for (std::size_t t = 0; t < seq_len; ++t) {
        batch.inputs[b * seq_len + t] = ids[base + t];
        batch.targets[b * seq_len + t] = ids[base + t + 1];
      }
    }
  }
  return batches;
}

}  // namespace wt

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wt/matrix.hpp"
#include "wt/vocabulary.hpp"

namespace wt {

// sentences: one sentence per line, <eos> appended to each line.
// stream: the file is one continuous token stream, no <eos> inserted.
enum class CorpusMode { sentences, stream };

CorpusMode parse_corpus_mode(const std::string& name);

std::vector<std::string> split_whitespace(std::string_view line);

std::vector<std::string> tokenize_lines(std::span<const std::string> lines, CorpusMode mode);
std::vector<std::string> read_tokens(const std::filesystem::path& path, CorpusMode mode);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// OOV tokens map to unk.
std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocabulary& vocab);
std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab);

/// One truncated-BPTT window. Row b of inputs/targets is lane b.
struct BpttBatch {
  std::size_t batch_size = 0;
  std::size_t seq_len = 0;
  std::vector<TokenId> inputs;   // batch_size x seq_len, row-major
  std::vector<TokenId> targets;  // same layout

  TokenId input(std::size_t b, std::size_t t) const { return inputs[b * seq_len + t]; }
  TokenId target(std::size_t b, std::size_t t) const { return targets[b * seq_len + t]; }
};

// Splits the stream into batch_size contiguous lanes and cuts each lane into
// consecutive seq_len windows; targets are inputs shifted by one. Trailing
// tokens that do not fill a window are dropped. Consecutive batches continue
// each lane, so hidden state can be carried from one batch to the next.
std::vector<BpttBatch> batchify(std::span<const TokenId> ids, std::size_t batch_size,
                                std::size_t seq_len);

}  // namespace wt

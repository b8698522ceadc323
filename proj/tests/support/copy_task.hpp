#pragma once

#include <cstdint>
#include <vector>

#include "wt/nmt.hpp"
#include "wt/random.hpp"

namespace wt::testing {

/// Random symbol strings paired with themselves. Symbols take ids
/// [0, symbols); the end marker is the next id.
class CopyTask {
 public:
  CopyTask(std::size_t symbols, std::size_t max_len, std::uint64_t seed)
      : symbols_(symbols), max_len_(max_len), seed_(seed) {}

  std::size_t vocab_size() const { return symbols_ + 1; }
  TokenId eos() const { return static_cast<TokenId>(symbols_); }

  std::vector<nmt::SentencePair> pairs(std::size_t n) const { return pairs(n, seed_); }

  std::vector<nmt::SentencePair> pairs(std::size_t n, std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<nmt::SentencePair> out(n);
    for (auto& p : out) {
      const std::size_t len = 1 + rng.below(max_len_);
      for (std::size_t i = 0; i < len; ++i) p.source.push_back(static_cast<TokenId>(rng.below(symbols_)));
      p.target = p.source;
    }
    return out;
  }

 private:
  std::size_t symbols_;
  std::size_t max_len_;
  std::uint64_t seed_;
};

}  // namespace wt::testing

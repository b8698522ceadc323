#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wt/embedding.hpp"

namespace wt {

struct WordPair {
  std::string a;
  std::string b;
  double score = 0.0;
};

/// Human similarity judgments; no duplicate unordered pairs.
class WordPairDataset {
 public:
  WordPairDataset() = default;
  explicit WordPairDataset(std::vector<WordPair> pairs);

  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<WordPair>& pairs() const noexcept { return pairs_; }

 private:
  std::vector<WordPair> pairs_;
};

// "word-a<TAB>word-b<TAB>score" (any whitespace accepted). A first line whose
// third field is not a number is treated as a header.
WordPairDataset read_word_pairs(const std::filesystem::path& path);

struct EvalReport {
  double rho = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped_oov = 0;
};

std::string format_report(const EvalReport& report);

// u.v / (|u||v|). Throws NumericError if either vector is zero.
double cosine(std::span<const double> u, std::span<const double> v);

// Fractional ranks (1-based); ties receive the average of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

// Pearson correlation of the rank vectors. Throws NumericError on a constant
// input and ArgumentError on mismatched or short inputs.
double spearman(std::span<const double> xs, std::span<const double> ys);

// Spearman rho between cosine similarity and human score over in-vocabulary
// pairs. Throws NumericError when fewer than two pairs are usable.
EvalReport eval_benchmark(const Embedding& emb, const WordPairDataset& data);

// The K most frequent words of a frequency-ordered vocabulary that are present
// in every embedding. top_k == 0 keeps all.
std::vector<std::string> shared_words(std::span<const std::string> frequency_ordered,
                                      std::span<const Embedding* const> embeddings,
                                      std::size_t top_k);

inline constexpr std::size_t kDefaultDistanceTopK = 2000;

// Spearman rho between the upper-triangle cosine-distance vectors of the two
// embeddings restricted to `words`. Throws ArgumentError when a word is
// missing (message lists the missing words) or fewer than 3 words are given.
double distance_correlation(const Embedding& a, const Embedding& b,
                            std::span<const std::string> words);

}  // namespace wt

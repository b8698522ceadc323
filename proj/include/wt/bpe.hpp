#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wt::bpe {

// Appended to every non-final subword of a segmented word.
inline constexpr std::string_view kContinuation = "@@";
// Marks the final symbol of a word while learning and applying merges.
inline constexpr std::string_view kEndOfWord = "</w>";
inline constexpr std::string_view kFormatVersion = "0.2";

// Merge count used for the full-scale translation vocabularies. Desk runs use
// far fewer merges.
inline constexpr std::size_t kReferenceMergeCount = 89500;

using SymbolPair = std::pair<std::string, std::string>;
using WordFrequencies = std::map<std::string, std::uint64_t>;

/// Ordered merge operations. Position in the table is the application priority.
class MergeTable {
 public:
  MergeTable() = default;

  // Throws ArgumentError on a duplicate pair.
  void add(std::string left, std::string right);

  std::size_t size() const noexcept { return merges_.size(); }
  bool empty() const noexcept { return merges_.empty(); }
  const std::vector<SymbolPair>& merges() const noexcept { return merges_; }
  std::optional<std::size_t> rank(const std::string& left, const std::string& right) const;

  // First n merges.
  MergeTable prefix(std::size_t n) const;

  friend bool operator==(const MergeTable& a, const MergeTable& b) { return a.merges_ == b.merges_; }

 private:
  std::vector<SymbolPair> merges_;
  std::map<SymbolPair, std::size_t> ranks_;
};

// UTF-8 code points of `word`; the last one carries the end-of-word marker.
std::vector<std::string> initial_symbols(std::string_view word);

// Greedy most-frequent-pair merging. Stops after num_merges merges or when no
// pair occurs at least twice. Ties go to the lexicographically smallest
// (left, right) pair.
MergeTable learn_bpe(const WordFrequencies& words, std::size_t num_merges);

// Sums two frequency tables (learning on the union of two corpora).
WordFrequencies merge_frequencies(const WordFrequencies& a, const WordFrequencies& b);

WordFrequencies count_words(std::span<const std::string> lines);

// Segments one word; every subword except the last ends in "@@".
std::vector<std::string> apply_bpe(std::string_view word, const MergeTable& table);

// Segments every whitespace-separated word of a line and joins with spaces.
std::string apply_bpe_line(std::string_view line, const MergeTable& table);

// Inverse of apply_bpe for one word.
std::string join_subwords(std::span<const std::string> subwords);

// Inverse of apply_bpe_line: removes every "@@ ".
std::string desegment_line(std::string_view line);

struct OverlapReport {
  std::size_t only_source = 0;
  std::size_t only_target = 0;
  std::size_t shared = 0;

  std::size_t union_size() const noexcept { return only_source + only_target + shared; }
  friend bool operator==(const OverlapReport&, const OverlapReport&) = default;
};

OverlapReport vocab_overlap(const std::set<std::string>& source, const std::set<std::string>& target);

// Distinct subword tokens of already-segmented text.
std::set<std::string> subword_vocab(std::span<const std::string> segmented_lines);

void write_merge_table(const MergeTable& table, const std::filesystem::path& path);
MergeTable read_merge_table(const std::filesystem::path& path);

}  // namespace wt::bpe

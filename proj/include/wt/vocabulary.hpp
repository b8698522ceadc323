#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wt/numeric.hpp"

namespace wt {

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kEosToken = "<eos>";

// Which tokens survive vocabulary construction.
struct VocabPolicy {
  enum class Kind { min_count, max_size };
  Kind kind = Kind::min_count;
  std::size_t value = 1;

  static VocabPolicy min_count(std::size_t n) { return {Kind::min_count, n}; }
  // Total vocabulary size, including <unk> and <eos>.
  static VocabPolicy max_size(std::size_t n) { return {Kind::max_size, n}; }
};

/// Bijection between tokens and dense ids [0, C), with per-token counts.
/// <unk> and <eos> are always present exactly once.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Tokens in id order with their counts. Adds <unk>/<eos> (count 0) if absent.
  static Vocabulary from_entries(std::vector<std::pair<std::string, std::uint64_t>> entries);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId unk_id() const noexcept { return unk_id_; }
  TokenId eos_id() const noexcept { return eos_id_; }

  bool contains(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  // OOV tokens map to unk_id().
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::uint64_t count(TokenId id) const;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId unk_id_ = 0;
  TokenId eos_id_ = 0;
};

// Ids are assigned by descending count with lexicographic tie-break. Tokens
// that fail the policy are counted towards <unk>.
Vocabulary build_vocab(std::span<const std::string> stream, VocabPolicy policy);

// Union of two vocabularies; counts are summed and ids reassigned by
// descending combined count.
Vocabulary union_vocab(const Vocabulary& a, const Vocabulary& b);

// Tab-separated "token<TAB>count", one line per id.
void write_vocab(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary read_vocab(const std::filesystem::path& path);

}  // namespace wt

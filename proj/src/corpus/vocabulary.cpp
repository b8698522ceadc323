#include "wt/vocabulary.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include "wt/errors.hpp"

namespace wt {

namespace {

using Entry = std::pair<std::string, std::uint64_t>;

void sort_by_count(std::vector<Entry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
}

}  // namespace

Vocabulary Vocabulary::from_entries(std::vector<Entry> entries) {
  const auto has = [&](std::string_view t) {
    return std::any_of(entries.begin(), entries.end(), [&](const Entry& e) { return e.first == t; });
  };
  if (!has(kUnkToken)) entries.emplace_back(std::string(kUnkToken), 0);
  if (!has(kEosToken)) entries.emplace_back(std::string(kEosToken), 0);

  Vocabulary v;
  v.tokens_.reserve(entries.size());
  v.counts_.reserve(entries.size());
  for (auto& [token, count] : entries) {
    const auto id = static_cast<TokenId>(v.tokens_.size());
    if (!v.index_.emplace(token, id).second)
      throw ArgumentError("vocabulary: duplicate token '" + token + "'");
    v.tokens_.push_back(std::move(token));
    v.counts_.push_back(count);
  }
  v.unk_id_ = v.index_.at(std::string(kUnkToken));
  v.eos_id_ = v.index_.at(std::string(kEosToken));
  return v;
}

bool Vocabulary::contains(std::string_view token) const { return find(token).has_value(); }

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(unk_id_); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw ArgumentError("vocabulary: id out of range");
  return tokens_[id];
}

std::uint64_t Vocabulary::count(TokenId id) const {
  if (id >= counts_.size()) throw ArgumentError("vocabulary: id out of range");
  return counts_[id];
}

Vocabulary build_vocab(std::span<const std::string> stream, VocabPolicy policy) {
  if (stream.empty()) throw ArgumentError("build_vocab: empty token stream");

  std::map<std::string, std::uint64_t, std::less<>> counts;
  for (const auto& t : stream) ++counts[t];

  std::uint64_t unk_count = 0;
  std::uint64_t eos_count = 0;
  std::vector<Entry> regular;
  for (auto& [token, count] : counts) {
    if (token == kUnkToken) {
      unk_count += count;
    } else if (token == kEosToken) {
      eos_count += count;
    } else {
      regular.emplace_back(token, count);
    }
  }
  sort_by_count(regular);

  std::size_t keep = regular.size();
  if (policy.kind == VocabPolicy::Kind::min_count) {
    keep = static_cast<std::size_t>(
        std::find_if(regular.begin(), regular.end(),
                     [&](const Entry& e) { return e.second < policy.value; }) -
        regular.begin());
  } else {
    if (policy.value < 2) throw ArgumentError("build_vocab: max-size must leave room for <unk> and <eos>");
    keep = std::min(keep, policy.value - 2);
  }
  for (std::size_t i = keep; i < regular.size(); ++i) unk_count += regular[i].second;
  regular.resize(keep);
  regular.emplace_back(std::string(kUnkToken), unk_count);
  regular.emplace_back(std::string(kEosToken), eos_count);
  sort_by_count(regular);
  return Vocabulary::from_entries(std::move(regular));
}

Vocabulary union_vocab(const Vocabulary& a, const Vocabulary& b) {
  std::map<std::string, std::uint64_t> counts;
  for (TokenId i = 0; i < a.size(); ++i) counts[a.token(i)] += a.count(i);
  for (TokenId i = 0; i < b.size(); ++i) counts[b.token(i)] += b.count(i);
  std::vector<Entry> entries(counts.begin(), counts.end());
  sort_by_count(entries);
  return Vocabulary::from_entries(std::move(entries));
}

void write_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (TokenId i = 0; i < vocab.size(); ++i) out << vocab.token(i) << '\t' << vocab.count(i) << '\n';
  if (!out) throw IoError("failed writing vocabulary " + path.string());
}

Vocabulary read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::vector<Entry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::uint64_t count = 0;
    std::string token = line.substr(0, tab);
    if (tab != std::string::npos) {
      const char* first = line.data() + tab + 1;
      const char* last = line.data() + line.size();
      const auto [ptr, ec] = std::from_chars(first, last, count);
      if (ec != std::errc() || ptr != last)
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad count");
    }
    entries.emplace_back(std::move(token), count);
  }
  try {
    return Vocabulary::from_entries(std::move(entries));
  } catch (const ArgumentError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace wt

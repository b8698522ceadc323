#include "wt/bpe.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "wt/corpus.hpp"
#include "wt/errors.hpp"

namespace wt::bpe {

void MergeTable::add(std::string left, std::string right) {
  SymbolPair pair{std::move(left), std::move(right)};
  if (!ranks_.emplace(pair, merges_.size()).second)
    throw ArgumentError("merge table: duplicate pair '" + pair.first + " " + pair.second + "'");
  merges_.push_back(std::move(pair));
}

std::optional<std::size_t> MergeTable::rank(const std::string& left, const std::string& right) const {
  const auto it = ranks_.find(SymbolPair{left, right});
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

MergeTable MergeTable::prefix(std::size_t n) const {
  MergeTable out;
  for (std::size_t i = 0; i < std::min(n, merges_.size()); ++i)
    out.add(merges_[i].first, merges_[i].second);
  return out;
}

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: treat as its own symbol
}

// Merges every non-overlapping occurrence of (left, right), scanning left to right.
void merge_pair(std::vector<std::string>& symbols, const std::string& left, const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(std::move(symbols[i]));
      ++i;
    }
  }
  symbols = std::move(out);
}

struct LearnState {
  std::vector<std::vector<std::string>> words;
  std::vector<std::uint64_t> freqs;
  std::map<SymbolPair, std::uint64_t> stats;
  std::map<SymbolPair, std::set<std::size_t>> where;

  // Ordered by descending frequency, then ascending pair.
  struct ByFreq {
    bool operator()(const std::pair<std::uint64_t, SymbolPair>& a,
                    const std::pair<std::uint64_t, SymbolPair>& b) const {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    }
  };
  std::set<std::pair<std::uint64_t, SymbolPair>, ByFreq> ranked;

  void adjust(const SymbolPair& pair, std::int64_t delta, std::size_t word) {
    auto& count = stats[pair];
    if (count > 0) ranked.erase({count, pair});
    count = static_cast<std::uint64_t>(static_cast<std::int64_t>(count) + delta);
    if (count > 0) {
      ranked.insert({count, pair});
    } else {
      stats.erase(pair);
    }
    if (delta > 0) where[pair].insert(word);
  }

  void add_word_pairs(std::size_t w, std::int64_t sign) {
    const auto& syms = words[w];
    const auto f = static_cast<std::int64_t>(freqs[w]);
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) adjust({syms[i], syms[i + 1]}, sign * f, w);
  }
};

}  // namespace

std::vector<std::string> initial_symbols(std::string_view word) {
  std::vector<std::string> symbols;
  std::size_t i = 0;
  while (i < word.size()) {
    const std::size_t n = std::min(utf8_length(static_cast<unsigned char>(word[i])), word.size() - i);
    symbols.emplace_back(word.substr(i, n));
    i += n;
  }
  if (!symbols.empty()) symbols.back() += kEndOfWord;
  return symbols;
}

MergeTable learn_bpe(const WordFrequencies& words, std::size_t num_merges) {
  if (words.empty()) throw ArgumentError("learn_bpe: empty word-frequency table");

  LearnState state;
  for (const auto& [word, freq] : words) {
    if (word.empty() || freq == 0) continue;
    state.words.push_back(initial_symbols(word));
    state.freqs.push_back(freq);
  }
  for (std::size_t w = 0; w < state.words.size(); ++w) state.add_word_pairs(w, +1);

  MergeTable table;
  while (table.size() < num_merges && !state.ranked.empty()) {
    const auto [freq, best] = *state.ranked.begin();
    if (freq < 2) break;
    table.add(best.first, best.second);

    const std::set<std::size_t> affected = state.where[best];
    for (std::size_t w : affected) {
      auto& syms = state.words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size() && !present; ++i)
        present = syms[i] == best.first && syms[i + 1] == best.second;
      if (!present) continue;
      state.add_word_pairs(w, -1);
      merge_pair(syms, best.first, best.second);
      state.add_word_pairs(w, +1);
    }
    state.where.erase(best);
  }
  return table;
}

WordFrequencies merge_frequencies(const WordFrequencies& a, const WordFrequencies& b) {
  WordFrequencies out = a;
  for (const auto& [word, freq] : b) out[word] += freq;
  return out;
}

WordFrequencies count_words(std::span<const std::string> lines) {
  WordFrequencies freqs;
  for (const auto& line : lines)
    for (auto& word : split_whitespace(line)) ++freqs[word];
  return freqs;
}

std::vector<std::string> apply_bpe(std::string_view word, const MergeTable& table) {
  auto symbols = initial_symbols(word);
  if (symbols.empty()) return symbols;

  while (symbols.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      const auto r = table.rank(symbols[i], symbols[i + 1]);
      if (r && *r < best_rank) {
        best_rank = *r;
        best_pos = i;
      }
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    const std::string left = symbols[best_pos];
    const std::string right = symbols[best_pos + 1];
    merge_pair(symbols, left, right);
  }

  auto& last = symbols.back();
  last.erase(last.size() - kEndOfWord.size());
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) symbols[i] += kContinuation;
  return symbols;
}

std::string apply_bpe_line(std::string_view line, const MergeTable& table) {
  std::string out;
  for (const auto& word : split_whitespace(line)) {
    for (const auto& sub : apply_bpe(word, table)) {
      if (!out.empty()) out += ' ';
      out += sub;
    }
  }
  return out;
}

std::string join_subwords(std::span<const std::string> subwords) {
  std::string out;
  for (std::size_t i = 0; i < subwords.size(); ++i) {
    std::string_view s = subwords[i];
    if (i + 1 < subwords.size() && s.ends_with(kContinuation)) s.remove_suffix(kContinuation.size());
    out += s;
  }
  return out;
}

std::string desegment_line(std::string_view line) {
  std::string out(line);
  const std::string marker = std::string(kContinuation) + " ";
  std::size_t pos = 0;
  while ((pos = out.find(marker, pos)) != std::string::npos) out.erase(pos, marker.size());
  return out;
}

OverlapReport vocab_overlap(const std::set<std::string>& source, const std::set<std::string>& target) {
  OverlapReport r;
  for (const auto& s : source) {
    if (target.count(s)) {
      ++r.shared;
    } else {
      ++r.only_source;
    }
  }
  r.only_target = target.size() - r.shared;
  return r;
}

std::set<std::string> subword_vocab(std::span<const std::string> segmented_lines) {
  std::set<std::string> vocab;
  for (const auto& line : segmented_lines)
    for (auto& tok : split_whitespace(line)) vocab.insert(std::move(tok));
  return vocab;
}

void write_merge_table(const MergeTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write merge table " + path.string());
  out << "#version: " << kFormatVersion << " continuation: " << kContinuation
      << " end-of-word: " << kEndOfWord << '\n';
  for (const auto& [left, right] : table.merges()) out << left << ' ' << right << '\n';
  if (!out) throw IoError("failed writing merge table " + path.string());
}

MergeTable read_merge_table(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || !lines.front().starts_with("#version:"))
    throw IoError(path.string() + ": missing merge table header");
  const auto header = split_whitespace(lines.front());
  if (header.size() < 2 || header[1] != kFormatVersion)
    throw IoError(path.string() + ": unsupported merge table version");
  for (std::size_t i = 2; i + 1 < header.size(); i += 2) {
    if (header[i] == "continuation:" && header[i + 1] != kContinuation)
      throw IoError(path.string() + ": merge table uses marker '" + header[i + 1] + "'");
  }

  MergeTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto parts = split_whitespace(lines[i]);
    if (parts.size() != 2)
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": expected 'left right'");
    try {
      table.add(parts[0], parts[1]);
    } catch (const ArgumentError& e) {
      throw IoError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return table;
}

}  // namespace wt::bpe

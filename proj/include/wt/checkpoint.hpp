#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "wt/language_model.hpp"
#include "wt/nmt.hpp"
#include "wt/skipgram.hpp"
#include "wt/vocabulary.hpp"

namespace wt {

// Binary layout, all integers and reals little-endian:
//   "WTCK", u32 format version, u32 kind, kind-specific header,
//   vocabulary blocks (u32 size, then per token: u32 length, bytes, u64 count),
//   u32 matrix count, then per matrix: u32 name length, name, u32 rows,
//   u32 cols, rows*cols f32 values in row-major order.
// Header reals (dropout, lambda) are f64 so that configurations survive
// exactly; parameters are f32.
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointKind : std::uint32_t { lm = 1, skipgram = 2, nmt = 3 };
std::string to_string(CheckpointKind kind);

struct LmCheckpoint {
  Vocabulary vocab;
  lm::LanguageModel model;
};

struct SkipGramCheckpoint {
  Vocabulary vocab;
  skipgram::SkipGramModel model;
};

/// With three-way tying both vocabularies are the shared union and only one
/// block is stored.
struct NmtCheckpoint {
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  nmt::NmtModel model;
};

std::string serialize(const lm::LanguageModel& model, const Vocabulary& vocab);
std::string serialize(const skipgram::SkipGramModel& model, const Vocabulary& vocab);
std::string serialize(const nmt::NmtModel& model, const Vocabulary& source_vocab, const Vocabulary& target_vocab);

// All parsers throw IoError on a bad magic, version, kind or truncation.
CheckpointKind peek_kind(std::string_view bytes);
LmCheckpoint parse_lm(std::string_view bytes);
SkipGramCheckpoint parse_skipgram(std::string_view bytes);
NmtCheckpoint parse_nmt(std::string_view bytes);

void write_bytes(const std::filesystem::path& path, std::string_view bytes);
std::string read_bytes(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const lm::LanguageModel& model, const Vocabulary& vocab);
void save_checkpoint(const std::filesystem::path& path, const skipgram::SkipGramModel& model,
                     const Vocabulary& vocab);
void save_checkpoint(const std::filesystem::path& path, const nmt::NmtModel& model, const Vocabulary& source_vocab,
                     const Vocabulary& target_vocab);

CheckpointKind checkpoint_kind(const std::filesystem::path& path);
LmCheckpoint load_lm(const std::filesystem::path& path);
SkipGramCheckpoint load_skipgram(const std::filesystem::path& path);
NmtCheckpoint load_nmt(const std::filesystem::path& path);

// Input, output or shared embedding of an lm or skipgram checkpoint. A tied
// model accepts every role; an untied one rejects `tied` with ArgumentError.
Embedding checkpoint_embedding(const std::filesystem::path& path, EmbeddingRole role);

}  // namespace wt

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wt/corpus.hpp"
#include "wt/nmt.hpp"
#include "wt/optimizer.hpp"
#include "wt/skipgram.hpp"

namespace wt {

enum class Task { lm, skipgram, nmt };
std::string to_string(Task task);
Task parse_task(const std::string& name);

struct LmSettings {
  std::string preset = "small";
  std::size_t hidden = 0;
  bool tied = false;
  bool projection = false;
  std::optional<double> lambda;  // present iff projection
  double dropout = 0.0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  std::size_t seq_len = 0;
  double learning_rate = 0.0;
  int decay_start = 0;
  double decay_factor = 1.0;
  double clip_norm = 0.0;
  double init_scale = 0.0;
};

struct SkipGramSettings {
  std::size_t dim = 64;
  bool tied = false;
  skipgram::TrainConfig train;
};

struct NmtSettings {
  std::size_t embed = 32;
  std::size_t hidden = 32;
  nmt::Tying tying = nmt::Tying::none;
  std::size_t max_len = 50;
  nmt::TrainConfig train;
};

/// A validated experiment. Every field has its effective value, so `to_ini`
/// reproduces a configuration that reruns the same experiment.
struct ExperimentConfig {
  Task task = Task::lm;
  std::uint64_t seed = 0;
  std::filesystem::path output;

  // lm and skipgram
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  CorpusMode corpus_mode = CorpusMode::sentences;
  std::size_t vocab_min_count = 1;
  std::size_t vocab_max_size = 0;  // 0: use vocab_min_count

  // nmt: one sentence per line, aligned
  std::filesystem::path source;
  std::filesystem::path target;
  std::filesystem::path valid_source;
  std::filesystem::path valid_target;

  LmSettings lm;
  SkipGramSettings skipgram;
  NmtSettings nmt;

  // Input files by role, in a fixed order, for hashing.
  std::vector<std::pair<std::string, std::filesystem::path>> inputs() const;
};

// Raw "section.key" -> value pairs of an INI text. Throws ConfigError on
// syntax errors or duplicate keys.
std::map<std::string, std::string> read_ini(std::string_view text);

// Schema validation. Unknown, missing or ill-typed keys raise ConfigError
// naming the field ("section.key"). `overrides` are applied on top of the file
// contents before validation.
ExperimentConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::map<std::string, std::string>& overrides = {});

std::string to_ini(const ExperimentConfig& config);

// Git object id of a blob: SHA-1 over "blob <size>\0" followed by the bytes.
std::string git_blob_hash(std::string_view bytes);
std::string git_blob_hash_file(const std::filesystem::path& path);

// Artifact file names inside the output directory.
inline constexpr std::string_view kConfigFile = "config.ini";
inline constexpr std::string_view kManifestFile = "manifest.txt";
inline constexpr std::string_view kMetricsFile = "metrics.tsv";
inline constexpr std::string_view kTimingFile = "timing.tsv";
inline constexpr std::string_view kCheckpointFile = "model.ckpt";
inline constexpr std::string_view kResultsFile = "results.txt";

// Trains the configured model and writes config, manifest, metrics, timing,
// checkpoint and results into config.output. Progress lines go to `log`.
void run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace wt

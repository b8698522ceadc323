#include "wt/experiment.hpp"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "wt/checkpoint.hpp"
#include "wt/errors.hpp"
#include "wt/lm_train.hpp"

namespace wt {

namespace {

/// Typed, field-named access to raw config values. Every key read is marked,
/// so leftovers can be reported as unknown.
class Fields {
 public:
  explicit Fields(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

  bool has(const std::string& key) const { return raw_.count(key) != 0; }

  std::optional<std::string> text(const std::string& key) {
    const auto it = raw_.find(key);
    if (it == raw_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string required(const std::string& key) {
    auto v = text(key);
    if (!v || v->empty()) throw ConfigError(key, "required");
    return *v;
  }

  std::string text(const std::string& key, const std::string& fallback) { return text(key).value_or(fallback); }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    const auto v = text(key);
    return v ? to_integer(key, *v) : fallback;
  }

  std::uint64_t required_integer(const std::string& key) { return to_integer(key, required(key)); }

  double real(const std::string& key, double fallback) {
    const auto v = text(key);
    return v ? to_real(key, *v) : fallback;
  }

  std::optional<double> optional_real(const std::string& key) {
    const auto v = text(key);
    if (!v) return std::nullopt;
    return to_real(key, *v);
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto v = text(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + *v + "'");
  }

  void reject_unused(Task task) const {
    for (const auto& [key, value] : raw_)
      if (!used_.count(key)) throw ConfigError(key, "unknown key for task " + to_string(task));
  }

 private:
  static std::uint64_t to_integer(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
      throw ConfigError(key, "expected a non-negative integer, got '" + s + "'");
    return v;
  }

  static double to_real(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(key, "expected a finite number, got '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> raw_;
  std::set<std::string> used_;
};

std::string real_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class Fn>
void wrap_config_error(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    if (e.field() == field) throw;
    const std::string what = e.what();
    throw ConfigError(field, what.substr(e.field().size() + 2));
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

void positive(const std::string& field, double v) {
  if (!(v > 0.0)) throw ConfigError(field, "must be > 0");
}

void parse_lm(Fields& f, LmSettings& s) {
  s.preset = f.text("model.preset", "small");
  lm::SizePreset p;
  wrap_config_error("model.preset", [&] { p = lm::SizePreset::by_name(s.preset); });
  s.hidden = f.integer("model.hidden", p.hidden);
  s.tied = f.boolean("model.tied", false);
  s.projection = f.boolean("model.projection", false);
  s.lambda = f.optional_real("model.lambda");
  if (s.projection && !s.lambda) throw ConfigError("model.lambda", "required when model.projection = true");
  if (!s.projection && s.lambda) throw ConfigError("model.lambda", "only allowed when model.projection = true");
  if (s.lambda && !(*s.lambda >= 0.0)) throw ConfigError("model.lambda", "must be >= 0");
  s.dropout = f.real("model.dropout", p.dropout);
  if (!(s.dropout >= 0.0 && s.dropout < 1.0)) throw ConfigError("model.dropout", "must lie in [0, 1)");
  s.epochs = f.integer("train.epochs", p.epochs);
  s.batch_size = f.integer("train.batch_size", p.batch_size);
  s.seq_len = f.integer("train.seq_len", p.seq_len);
  s.learning_rate = f.real("train.learning_rate", p.learning_rate);
  s.decay_start = static_cast<int>(f.integer("train.decay_start", static_cast<std::uint64_t>(p.decay_start_epoch)));
  s.decay_factor = f.real("train.decay_factor", p.decay_factor);
  s.clip_norm = f.real("train.clip_norm", p.clip_norm);
  s.init_scale = f.real("train.init_scale", p.init_scale);
  if (s.hidden == 0) throw ConfigError("model.hidden", "must be positive");
  if (s.epochs == 0) throw ConfigError("train.epochs", "must be positive");
  if (s.batch_size == 0) throw ConfigError("train.batch_size", "must be positive");
  if (s.seq_len == 0) throw ConfigError("train.seq_len", "must be positive");
  positive("train.learning_rate", s.learning_rate);
  positive("train.decay_factor", s.decay_factor);
  positive("train.init_scale", s.init_scale);
  if (s.clip_norm < 0.0) throw ConfigError("train.clip_norm", "must be >= 0 (0 disables clipping)");
}

void parse_skipgram(Fields& f, SkipGramSettings& s) {
  s.dim = f.integer("model.dim", s.dim);
  s.tied = f.boolean("model.tied", false);
  auto& t = s.train;
  t.epochs = f.integer("train.epochs", t.epochs);
  t.window = f.integer("train.window", t.window);
  wrap_config_error("train.objective",
                    [&] { t.objective = skipgram::parse_objective(f.text("train.objective", to_string(t.objective))); });
  t.negatives = f.integer("train.negatives", t.negatives);
  t.noise_exponent = f.real("train.noise_exponent", t.noise_exponent);
  t.learning_rate = f.real("train.learning_rate", t.learning_rate);
  t.min_lr_fraction = f.real("train.min_lr_fraction", t.min_lr_fraction);
  t.subsample = f.real("train.subsample", t.subsample);
  if (s.dim == 0) throw ConfigError("model.dim", "must be positive");
  if (t.epochs == 0) throw ConfigError("train.epochs", "must be positive");
  if (t.window == 0) throw ConfigError("train.window", "must be positive");
  if (t.objective == skipgram::Objective::negative_sampling && t.negatives == 0)
    throw ConfigError("train.negatives", "must be positive");
  positive("train.learning_rate", t.learning_rate);
  if (t.subsample < 0.0) throw ConfigError("train.subsample", "must be >= 0");
}

void parse_nmt(Fields& f, NmtSettings& s) {
  s.embed = f.integer("model.embed", s.embed);
  s.hidden = f.integer("model.hidden", s.hidden);
  wrap_config_error("model.tying", [&] { s.tying = nmt::parse_tying(f.text("model.tying", "none")); });
  s.max_len = f.integer("model.max_len", s.max_len);
  auto& t = s.train;
  t.epochs = f.integer("train.epochs", t.epochs);
  t.batch_size = f.integer("train.batch_size", t.batch_size);
  wrap_config_error("train.optimizer", [&] {
    t.optimizer.kind = parse_optimizer_kind(f.text("train.optimizer", to_string(t.optimizer.kind)));
  });
  t.optimizer.learning_rate = f.real("train.learning_rate", t.optimizer.learning_rate);
  const double clip = f.real("train.clip_norm", t.optimizer.clip_norm.value_or(0.0));
  t.optimizer.clip_norm = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
  t.init_scale = f.real("train.init_scale", t.init_scale);
  if (s.embed == 0) throw ConfigError("model.embed", "must be positive");
  if (s.hidden == 0) throw ConfigError("model.hidden", "must be positive");
  if (s.max_len == 0) throw ConfigError("model.max_len", "must be positive");
  if (t.epochs == 0) throw ConfigError("train.epochs", "must be positive");
  if (t.batch_size == 0) throw ConfigError("train.batch_size", "must be positive");
  positive("train.learning_rate", t.optimizer.learning_rate);
  positive("train.init_scale", t.init_scale);
  if (clip < 0.0) throw ConfigError("train.clip_norm", "must be >= 0 (0 disables clipping)");
}

std::string read_text(const std::filesystem::path& path) { return read_bytes(path); }

class LineFile {
 public:
  explicit LineFile(const std::filesystem::path& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  void line(const std::string& s) {
    out_ << s << '\n';
    out_.flush();
    if (!out_) throw IoError("write to '" + path_.string() + "' failed");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void write_text(const std::filesystem::path& path, const std::string& text) { write_bytes(path, text); }

VocabPolicy vocab_policy(const ExperimentConfig& c) {
  return c.vocab_max_size > 0 ? VocabPolicy::max_size(c.vocab_max_size) : VocabPolicy::min_count(c.vocab_min_count);
}

std::string manifest_text(const ExperimentConfig& config, const std::string& echo) {
  std::ostringstream m;
  m << "format=1\n";
  m << "task=" << to_string(config.task) << '\n';
  m << "seed=" << config.seed << '\n';
  m << "config_hash=" << git_blob_hash(echo) << '\n';
  for (const auto& [role, path] : config.inputs())
    m << "input\t" << role << '\t' << git_blob_hash_file(path) << '\t' << path.string() << '\n';
  m << "[config]\n" << echo;
  return m.str();
}

void run_lm(const ExperimentConfig& c, std::ostream& log) {
  const auto train_tokens = read_tokens(c.train, c.corpus_mode);
  const Vocabulary vocab = build_vocab(train_tokens, vocab_policy(c));
  const auto train_ids = encode(train_tokens, vocab);
  std::vector<TokenId> valid_ids;
  if (!c.valid.empty()) valid_ids = encode(read_tokens(c.valid, c.corpus_mode), vocab);

  lm::LmConfig mc;
  mc.vocab_size = vocab.size();
  mc.hidden = c.lm.hidden;
  mc.tied = c.lm.tied;
  mc.projection = c.lm.projection;
  if (c.lm.lambda) mc.lambda = *c.lm.lambda;
  mc.dropout = c.lm.dropout;
  lm::LanguageModel model(mc);

  lm::TrainConfig tc;
  tc.batch_size = c.lm.batch_size;
  tc.seq_len = c.lm.seq_len;
  tc.epochs = c.lm.epochs;
  tc.optimizer.kind = OptimizerKind::sgd;
  tc.optimizer.learning_rate = c.lm.learning_rate;
  tc.optimizer.decay_start_epoch = c.lm.decay_start;
  tc.optimizer.decay_factor = c.lm.decay_factor;
  if (c.lm.clip_norm > 0.0) tc.optimizer.clip_norm = c.lm.clip_norm;
  tc.init_scale = c.lm.init_scale;
  tc.seed = c.seed;
  if (train_ids.size() < tc.batch_size * tc.seq_len + 1)
    throw ConfigError("train.batch_size", "training corpus too small for one batch of batch_size x seq_len");

  LineFile metrics(c.output / kMetricsFile);
  LineFile timing(c.output / kTimingFile);
  lm::train(model, train_ids, valid_ids, tc, [&](const lm::EpochRecord& r) {
    metrics.line(lm::format_metrics(r));
    timing.line(lm::format_timing(r));
    log << lm::format_metrics(r) << '\n';
  });
  save_checkpoint(c.output / kCheckpointFile, model, vocab);

  std::ostringstream results;
  results << "vocab_size=" << vocab.size() << '\n' << "param_count=" << model.param_count() << '\n';
  if (valid_ids.size() >= 2) results << "valid_ppl=" << real_text(lm::perplexity(model, valid_ids)) << '\n';
  if (!c.test.empty()) {
    const auto test_ids = encode(read_tokens(c.test, c.corpus_mode), vocab);
    if (test_ids.size() >= 2) results << "test_ppl=" << real_text(lm::perplexity(model, test_ids)) << '\n';
  }
  write_text(c.output / kResultsFile, results.str());
  log << results.str();
}

void run_skipgram(const ExperimentConfig& c, std::ostream& log) {
  const auto tokens = read_tokens(c.train, c.corpus_mode);
  const Vocabulary vocab = build_vocab(tokens, vocab_policy(c));
  const auto ids = encode(tokens, vocab);
  skipgram::SkipGramModel model(vocab.size(), c.skipgram.dim, c.skipgram.tied);
  skipgram::TrainConfig tc = c.skipgram.train;
  tc.seed = c.seed;
  const auto started = std::chrono::steady_clock::now();
  const auto records = skipgram::train(model, ids, vocab, tc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  LineFile metrics(c.output / kMetricsFile);
  for (const auto& r : records) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch=%zu\tlr=%.6g\tloss=%.6f\tpairs=%zu", r.epoch, r.learning_rate, r.mean_loss,
                  r.pairs);
    metrics.line(buf);
    log << buf << '\n';
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "total\twall_seconds=%.3f", seconds);
  LineFile(c.output / kTimingFile).line(buf);
  save_checkpoint(c.output / kCheckpointFile, model, vocab);
  std::ostringstream results;
  results << "vocab_size=" << vocab.size() << '\n' << "param_count=" << model.param_count() << '\n';
  write_text(c.output / kResultsFile, results.str());
  log << results.str();
}

std::vector<std::vector<std::string>> tokenized_lines(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) out.push_back(split_whitespace(line));
  return out;
}

std::vector<nmt::SentencePair> make_pairs(const std::vector<std::vector<std::string>>& src,
                                          const std::vector<std::vector<std::string>>& tgt,
                                          const Vocabulary& source_vocab, const Vocabulary& target_vocab,
                                          const std::string& what) {
  if (src.size() != tgt.size())
    throw IoError(what + ": source has " + std::to_string(src.size()) + " lines, target " +
                  std::to_string(tgt.size()));
  std::vector<nmt::SentencePair> pairs;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty()) throw IoError(what + ": empty source sentence on line " + std::to_string(i + 1));
    pairs.push_back({encode(src[i], source_vocab), encode(tgt[i], target_vocab)});
  }
  return pairs;
}

Vocabulary vocab_of(const std::vector<std::vector<std::string>>& lines, VocabPolicy policy) {
  std::vector<std::string> flat;
  for (const auto& l : lines) flat.insert(flat.end(), l.begin(), l.end());
  return build_vocab(flat, policy);
}

void run_nmt(const ExperimentConfig& c, std::ostream& log) {
  const auto src = tokenized_lines(c.source);
  const auto tgt = tokenized_lines(c.target);
  Vocabulary source_vocab = vocab_of(src, vocab_policy(c));
  Vocabulary target_vocab = vocab_of(tgt, vocab_policy(c));
  if (c.nmt.tying == nmt::Tying::three_way) {
    source_vocab = union_vocab(source_vocab, target_vocab);
    target_vocab = source_vocab;
  }
  const auto pairs = make_pairs(src, tgt, source_vocab, target_vocab, "training corpus");
  std::vector<nmt::SentencePair> valid;
  if (!c.valid_source.empty())
    valid = make_pairs(tokenized_lines(c.valid_source), tokenized_lines(c.valid_target), source_vocab, target_vocab,
                       "validation corpus");

  nmt::NmtConfig mc;
  mc.source_vocab = source_vocab.size();
  mc.target_vocab = target_vocab.size();
  mc.embed = c.nmt.embed;
  mc.hidden = c.nmt.hidden;
  mc.tying = c.nmt.tying;
  mc.eos = target_vocab.eos_id();
  nmt::NmtModel model(mc);
  nmt::TrainConfig tc = c.nmt.train;
  tc.seed = c.seed;

  LineFile metrics(c.output / kMetricsFile);
  LineFile timing(c.output / kTimingFile);
  double accuracy = 0.0;
  nmt::train(model, pairs, tc, [&](const nmt::EpochRecord& r) {
    std::string line = nmt::format_metrics(r);
    if (!valid.empty()) {
      accuracy = nmt::token_accuracy(model, valid, c.nmt.max_len);
      char buf[48];
      std::snprintf(buf, sizeof buf, "\tvalid_acc=%.6f", accuracy);
      line += buf;
    }
    metrics.line(line);
    char buf[80];
    std::snprintf(buf, sizeof buf, "epoch=%zu\twall_seconds=%.3f", r.epoch, r.wall_seconds);
    timing.line(buf);
    log << line << '\n';
  });
  save_checkpoint(c.output / kCheckpointFile, model, source_vocab, target_vocab);
  std::ostringstream results;
  results << "tying=" << nmt::to_string(mc.tying) << '\n'
          << "source_vocab=" << mc.source_vocab << '\n'
          << "target_vocab=" << mc.target_vocab << '\n'
          << "param_count=" << model.param_count() << '\n';
  if (!valid.empty()) results << "valid_acc=" << real_text(accuracy) << '\n';
  write_text(c.output / kResultsFile, results.str());
  log << results.str();
}

}  // namespace

std::string to_string(Task task) {
  switch (task) {
    case Task::lm: return "lm";
    case Task::skipgram: return "skipgram";
    case Task::nmt: return "nmt";
  }
  return "lm";
}

Task parse_task(const std::string& name) {
  if (name == "lm") return Task::lm;
  if (name == "skipgram") return Task::skipgram;
  if (name == "nmt") return Task::nmt;
  throw ConfigError("experiment.task", "expected lm, skipgram or nmt, got '" + name + "'");
}

std::vector<std::pair<std::string, std::filesystem::path>> ExperimentConfig::inputs() const {
  std::vector<std::pair<std::string, std::filesystem::path>> out;
  const auto add = [&](const char* role, const std::filesystem::path& p) {
    if (!p.empty()) out.emplace_back(role, p);
  };
  add("data.train", train);
  add("data.valid", valid);
  add("data.test", test);
  add("data.source", source);
  add("data.target", target);
  add("data.valid_source", valid_source);
  add("data.valid_target", valid_target);
  return out;
}

std::map<std::string, std::string> read_ini(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  std::map<std::string, std::string> out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section, "key outside of any section");
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides) {
  auto raw = read_ini(text);
  for (const auto& [k, v] : overrides) raw[k] = v;
  Fields f(std::move(raw));
  ExperimentConfig c;
  c.task = parse_task(f.required("experiment.task"));
  c.seed = f.required_integer("experiment.seed");
  c.output = f.required("experiment.output");

  wrap_config_error("data.corpus_mode", [&] { c.corpus_mode = parse_corpus_mode(f.text("data.corpus_mode", "sentences")); });
  c.vocab_min_count = f.integer("data.vocab_min_count", 1);
  c.vocab_max_size = f.integer("data.vocab_max_size", 0);
  if (c.vocab_min_count == 0) throw ConfigError("data.vocab_min_count", "must be positive");
  if (c.vocab_max_size != 0 && c.vocab_max_size < 2)
    throw ConfigError("data.vocab_max_size", "must leave room for <unk> and <eos>");
  if (c.vocab_max_size != 0 && f.has("data.vocab_min_count"))
    throw ConfigError("data.vocab_max_size", "give either vocab_min_count or vocab_max_size, not both");

  switch (c.task) {
    case Task::lm:
      c.train = f.required("data.train");
      c.valid = f.text("data.valid", "");
      c.test = f.text("data.test", "");
      parse_lm(f, c.lm);
      break;
    case Task::skipgram:
      c.train = f.required("data.train");
      parse_skipgram(f, c.skipgram);
      break;
    case Task::nmt:
      c.source = f.required("data.source");
      c.target = f.required("data.target");
      c.valid_source = f.text("data.valid_source", "");
      c.valid_target = f.text("data.valid_target", "");
      if (c.valid_source.empty() != c.valid_target.empty())
        throw ConfigError(c.valid_source.empty() ? "data.valid_source" : "data.valid_target",
                          "valid_source and valid_target go together");
      parse_nmt(f, c.nmt);
      break;
  }
  f.reject_unused(c.task);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::map<std::string, std::string>& overrides) {
  return parse_config(read_text(path), overrides);
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[experiment]\n"
    << "task = " << to_string(c.task) << '\n'
    << "seed = " << c.seed << '\n'
    << "output = " << c.output.string() << '\n';
  o << "\n[data]\n";
  const auto path_line = [&](const char* key, const std::filesystem::path& p) {
    if (!p.empty()) o << key << " = " << p.string() << '\n';
  };
  if (c.task == Task::nmt) {
    path_line("source", c.source);
    path_line("target", c.target);
    path_line("valid_source", c.valid_source);
    path_line("valid_target", c.valid_target);
  } else {
    path_line("train", c.train);
    path_line("valid", c.valid);
    path_line("test", c.test);
    o << "corpus_mode = " << (c.corpus_mode == CorpusMode::sentences ? "sentences" : "stream") << '\n';
  }
  if (c.vocab_max_size > 0)
    o << "vocab_max_size = " << c.vocab_max_size << '\n';
  else
    o << "vocab_min_count = " << c.vocab_min_count << '\n';

  o << "\n[model]\n";
  switch (c.task) {
    case Task::lm:
      o << "preset = " << c.lm.preset << '\n'
        << "hidden = " << c.lm.hidden << '\n'
        << "tied = " << (c.lm.tied ? "true" : "false") << '\n'
        << "projection = " << (c.lm.projection ? "true" : "false") << '\n';
      if (c.lm.lambda) o << "lambda = " << real_text(*c.lm.lambda) << '\n';
      o << "dropout = " << real_text(c.lm.dropout) << '\n';
      o << "\n[train]\n"
        << "epochs = " << c.lm.epochs << '\n'
        << "batch_size = " << c.lm.batch_size << '\n'
        << "seq_len = " << c.lm.seq_len << '\n'
        << "learning_rate = " << real_text(c.lm.learning_rate) << '\n'
        << "decay_start = " << c.lm.decay_start << '\n'
        << "decay_factor = " << real_text(c.lm.decay_factor) << '\n'
        << "clip_norm = " << real_text(c.lm.clip_norm) << '\n'
        << "init_scale = " << real_text(c.lm.init_scale) << '\n';
      break;
    case Task::skipgram: {
      const auto& t = c.skipgram.train;
      o << "dim = " << c.skipgram.dim << '\n' << "tied = " << (c.skipgram.tied ? "true" : "false") << '\n';
      o << "\n[train]\n"
        << "epochs = " << t.epochs << '\n'
        << "window = " << t.window << '\n'
        << "objective = " << to_string(t.objective) << '\n'
        << "negatives = " << t.negatives << '\n'
        << "noise_exponent = " << real_text(t.noise_exponent) << '\n'
        << "learning_rate = " << real_text(t.learning_rate) << '\n'
        << "min_lr_fraction = " << real_text(t.min_lr_fraction) << '\n'
        << "subsample = " << real_text(t.subsample) << '\n';
      break;
    }
    case Task::nmt: {
      const auto& t = c.nmt.train;
      o << "embed = " << c.nmt.embed << '\n'
        << "hidden = " << c.nmt.hidden << '\n'
        << "tying = " << nmt::to_string(c.nmt.tying) << '\n'
        << "max_len = " << c.nmt.max_len << '\n';
      o << "\n[train]\n"
        << "epochs = " << t.epochs << '\n'
        << "batch_size = " << t.batch_size << '\n'
        << "optimizer = " << to_string(t.optimizer.kind) << '\n'
        << "learning_rate = " << real_text(t.optimizer.learning_rate) << '\n'
        << "clip_norm = " << real_text(t.optimizer.clip_norm.value_or(0.0)) << '\n'
        << "init_scale = " << real_text(t.init_scale) << '\n';
      break;
    }
  }
  return o.str();
}

std::string git_blob_hash(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("sha1: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string git_blob_hash_file(const std::filesystem::path& path) { return git_blob_hash(read_bytes(path)); }

void run_experiment(const ExperimentConfig& config, std::ostream& log) {
  std::error_code ec;
  std::filesystem::create_directories(config.output, ec);
  if (ec) throw IoError("cannot create output directory '" + config.output.string() + "': " + ec.message());
  const std::string echo = to_ini(config);
  write_text(config.output / kConfigFile, echo);
  write_text(config.output / kManifestFile, manifest_text(config, echo));
  switch (config.task) {
    case Task::lm: run_lm(config, log); break;
    case Task::skipgram: run_skipgram(config, log); break;
    case Task::nmt: run_nmt(config, log); break;
  }
}

}  // namespace wt

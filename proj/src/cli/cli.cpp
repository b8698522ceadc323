#include "wt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "wt/bpe.hpp"
#include "wt/checkpoint.hpp"
#include "wt/embed_eval.hpp"
#include "wt/errors.hpp"
#include "wt/experiment.hpp"
#include "wt/lm_train.hpp"

namespace wt {

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

int train_command(Task task, const std::string& config_path, const std::map<std::string, std::string>& extra,
                  std::ostream& out) {
  auto raw = read_ini(read_bytes(config_path));
  const auto it = raw.find("experiment.task");
  if (it != raw.end() && it->second != to_string(task))
    throw ConfigError("experiment.task", "train-" + to_string(task) + " needs task = " + to_string(task) + ", got '" +
                                             it->second + "'");
  auto overrides = extra;
  overrides["experiment.task"] = to_string(task);
  run_experiment(parse_config(read_bytes(config_path), overrides), out);
  return kExitOk;
}

Embedding embedding_from(const std::string& embedding_path, const std::string& checkpoint, const std::string& role) {
  if (!embedding_path.empty()) return read_embedding(embedding_path);
  if (checkpoint.empty()) throw ArgumentError("give --embedding or --checkpoint");
  return checkpoint_embedding(checkpoint, parse_embedding_role(role));
}

std::vector<std::string> frequency_ordered_words(const std::string& checkpoint) {
  const std::string bytes = read_bytes(checkpoint);
  const Vocabulary vocab =
      peek_kind(bytes) == CheckpointKind::lm ? parse_lm(bytes).vocab : parse_skipgram(bytes).vocab;
  std::vector<std::string> words;
  for (const auto& t : vocab.tokens())
    if (t != kUnkToken && t != kEosToken) words.push_back(t);
  return words;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weight-tied language and translation model experiments", "wtlm"};
  app.require_subcommand(1);
  std::function<int()> action;

  std::string config, output, tying, checkpoint, data, corpus_mode = "sentences", embedding, role = "input",
                                                  pairs_file, a, b, role_a = "input", role_b = "output", words_file,
                                                  input, table, src, tgt, task = "lm", preset = "small";
  std::uint64_t seed = 0;
  std::size_t seq_len = 35, top_k = kDefaultDistanceTopK, merges = 0, vocab = lm::kReferenceVocab, max_len = 50,
              source_vocab = 0, target_vocab = 0, union_vocab_size = 0, embed = 0, hidden = 0;
  bool tied = false, projection = false;

  const auto overrides = [&](CLI::App* cmd) {
    std::map<std::string, std::string> o;
    const auto given = [cmd](const char* name) {
      const CLI::Option* opt = cmd->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (given("--seed")) o["experiment.seed"] = std::to_string(seed);
    if (given("--output")) o["experiment.output"] = output;
    if (given("--tying")) o["model.tying"] = tying;
    return o;
  };

  for (Task t : {Task::lm, Task::skipgram, Task::nmt}) {
    auto* cmd = app.add_subcommand("train-" + to_string(t), "Train a " + to_string(t) + " model from a config file");
    cmd->add_option("--config", config, "Experiment config (INI)")->required();
    cmd->add_option("--seed", seed, "Override experiment.seed");
    cmd->add_option("--output", output, "Override experiment.output");
    if (t == Task::nmt) cmd->add_option("--tying", tying, "none, decoder or twwt");
    cmd->callback([&, cmd, t] { action = [&, cmd, t] { return train_command(t, config, overrides(cmd), out); }; });
  }

  auto* run = app.add_subcommand("run", "Run the experiment a config file describes");
  run->add_option("--config", config, "Experiment config (INI)")->required();
  run->add_option("--seed", seed, "Override experiment.seed");
  run->add_option("--output", output, "Override experiment.output");
  run->callback([&] {
    action = [&] {
      run_experiment(load_config(config, overrides(run)), out);
      return kExitOk;
    };
  });

  auto* ppl = app.add_subcommand("eval-ppl", "Perplexity of a language model checkpoint on a corpus");
  ppl->add_option("--checkpoint", checkpoint)->required();
  ppl->add_option("--data", data)->required();
  ppl->add_option("--corpus-mode", corpus_mode, "sentences or stream");
  ppl->add_option("--seq-len", seq_len);
  ppl->callback([&] {
    action = [&] {
      const LmCheckpoint c = load_lm(checkpoint);
      const auto ids = encode(read_tokens(data, parse_corpus_mode(corpus_mode)), c.vocab);
      if (ids.size() < 2) throw ArgumentError("eval-ppl: corpus has fewer than two tokens");
      out << "perplexity=" << fixed(lm::perplexity(c.model, ids, seq_len)) << "\ttokens=" << ids.size() - 1 << '\n';
      return kExitOk;
    };
  });

  auto* eval = app.add_subcommand("eval-embed", "Spearman correlation with a word-similarity benchmark");
  eval->add_option("--embedding", embedding, "Embedding text file");
  eval->add_option("--checkpoint", checkpoint, "lm or skipgram checkpoint");
  eval->add_option("--role", role, "input, output or tied");
  eval->add_option("--pairs", pairs_file, "word-a word-b score lines")->required();
  eval->callback([&] {
    action = [&] {
      const Embedding emb = embedding_from(embedding, checkpoint, role);
      out << format_report(eval_benchmark(emb, read_word_pairs(pairs_file))) << '\n';
      return kExitOk;
    };
  });

  auto* cmp = app.add_subcommand("compare-embeddings", "Rank correlation of pairwise distances of two embeddings");
  cmp->add_option("--a", a, "First checkpoint")->required();
  cmp->add_option("--b", b, "Second checkpoint")->required();
  cmp->add_option("--role-a", role_a);
  cmp->add_option("--role-b", role_b);
  cmp->add_option("--top-k", top_k, "Most frequent words to compare; 0 keeps all");
  cmp->add_option("--words", words_file, "Explicit word list, one per line");
  cmp->callback([&] {
    action = [&] {
      const Embedding ea = checkpoint_embedding(a, parse_embedding_role(role_a));
      const Embedding eb = checkpoint_embedding(b, parse_embedding_role(role_b));
      std::vector<std::string> words;
      if (!words_file.empty()) {
        for (const auto& line : read_lines(words_file))
          for (auto& w : split_whitespace(line)) words.push_back(std::move(w));
      } else {
        const std::vector<const Embedding*> both{&ea, &eb};
        words = shared_words(frequency_ordered_words(a), both, top_k);
      }
      const double rho = distance_correlation(ea, eb, words);
      out << "rho=" << fixed(rho) << "\twords=" << words.size() << '\n';
      return kExitOk;
    };
  });

  auto* learn = app.add_subcommand("bpe-learn", "Learn BPE merge operations");
  learn->add_option("--input", input, "Training text, one sentence per line")->required();
  learn->add_option("--merges", merges, "Number of merge operations")->required();
  learn->add_option("--output", output, "Merge table file")->required();
  learn->callback([&] {
    action = [&] {
      const auto table = bpe::learn_bpe(bpe::count_words(read_lines(input)), merges);
      bpe::write_merge_table(table, output);
      out << "merges=" << table.size() << '\n';
      return kExitOk;
    };
  });

  auto* apply = app.add_subcommand("bpe-apply", "Segment text with a merge table");
  apply->add_option("--table", table, "Merge table file")->required();
  apply->add_option("--input", input, "Text to segment")->required();
  apply->add_option("--output", output, "Segmented text; standard output when omitted");
  apply->callback([&] {
    action = [&] {
      const auto merge_table = bpe::read_merge_table(table);
      const auto lines = read_lines(input);
      std::ofstream file;
      if (!output.empty()) file = open_output(output);
      std::ostream& sink = output.empty() ? out : file;
      for (const auto& line : lines) sink << bpe::apply_bpe_line(line, merge_table) << '\n';
      if (!sink) throw IoError("bpe-apply: write failed");
      return kExitOk;
    };
  });

  auto* overlap = app.add_subcommand("vocab-overlap", "Subword vocabulary overlap of two segmented corpora");
  overlap->add_option("--src", src)->required();
  overlap->add_option("--tgt", tgt)->required();
  overlap->callback([&] {
    action = [&] {
      const auto r = bpe::vocab_overlap(bpe::subword_vocab(read_lines(src)), bpe::subword_vocab(read_lines(tgt)));
      out << "source_only=" << r.only_source << "\ttarget_only=" << r.only_target << "\tshared=" << r.shared
          << "\tunion=" << r.union_size() << '\n';
      return kExitOk;
    };
  });

  auto* count = app.add_subcommand("param-count", "Exact parameter count of a model configuration");
  count->add_option("--checkpoint", checkpoint);
  count->add_option("--task", task, "lm or nmt");
  count->add_option("--preset", preset, "small or large");
  count->add_option("--vocab", vocab);
  count->add_option("--hidden", hidden, "Override the preset width");
  count->add_flag("--tied", tied);
  count->add_flag("--projection", projection);
  count->add_option("--source-vocab", source_vocab);
  count->add_option("--target-vocab", target_vocab);
  count->add_option("--union-vocab", union_vocab_size, "Shared vocabulary size for twwt");
  count->add_option("--embed", embed);
  count->add_option("--tying", tying);
  count->callback([&] {
    action = [&] {
      std::size_t n = 0;
      if (!checkpoint.empty()) {
        const std::string bytes = read_bytes(checkpoint);
        switch (peek_kind(bytes)) {
          case CheckpointKind::lm: n = parse_lm(bytes).model.param_count(); break;
          case CheckpointKind::skipgram: n = parse_skipgram(bytes).model.param_count(); break;
          case CheckpointKind::nmt: n = parse_nmt(bytes).model.param_count(); break;
        }
      } else if (task == "lm") {
        lm::SizePreset p;
        try {
          p = lm::SizePreset::by_name(preset);
        } catch (const ConfigError& e) {
          throw ConfigError("--preset", e.what());
        }
        lm::LmConfig c = lm::make_config(p, vocab, tied, projection);
        if (hidden > 0) c.hidden = hidden;
        n = lm::param_count(c);
      } else if (task == "nmt") {
        nmt::NmtConfig c;
        c.tying = nmt::parse_tying(tying.empty() ? "none" : tying);
        c.source_vocab = c.tying == nmt::Tying::three_way ? union_vocab_size : source_vocab;
        c.target_vocab = c.tying == nmt::Tying::three_way ? union_vocab_size : target_vocab;
        c.embed = embed;
        c.hidden = hidden;
        n = nmt::param_count(c);
      } else {
        throw ConfigError("--task", "expected lm or nmt, got '" + task + "'");
      }
      out << "param_count=" << n << '\n';
      return kExitOk;
    };
  });

  auto* translate = app.add_subcommand("translate", "Greedy translation with an nmt checkpoint");
  translate->add_option("--checkpoint", checkpoint)->required();
  translate->add_option("--input", input, "Source sentences, one per line")->required();
  translate->add_option("--max-len", max_len);
  translate->callback([&] {
    action = [&] {
      const NmtCheckpoint c = load_nmt(checkpoint);
      std::size_t line_no = 0;
      for (const auto& line : read_lines(input)) {
        ++line_no;
        const auto tokens = split_whitespace(line);
        if (tokens.empty()) throw IoError("translate: empty source sentence on line " + std::to_string(line_no));
        const auto hyp = nmt::translate_greedy(c.model, encode(tokens, c.source_vocab), max_len);
        const auto words = decode(hyp, c.target_vocab);
        for (std::size_t i = 0; i < words.size(); ++i) out << (i ? " " : "") << words[i];
        out << '\n';
      }
      return kExitOk;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return action();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace wt

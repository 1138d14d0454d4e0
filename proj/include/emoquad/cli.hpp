#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emoquad/checkpoint.hpp"
#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"
#include "emoquad/evaluator.hpp"
#include "emoquad/jsonl.hpp"
#include "emoquad/labeler.hpp"
#include "emoquad/preprocessor.hpp"
#include "emoquad/trainer.hpp"

namespace emoquad::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericError = 3,
};

inline constexpr const char* kSeedEnv = "EMOQUAD_SEED";

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  auto out = open_output(path);
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv(kSeedEnv);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(raw, &used);
    if (used != std::string(raw).size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string(kSeedEnv) + " must be a non-negative integer, got '" + raw + "'");
  }
}

struct LabelArgs {
  std::string input, lexicon, synonyms, emoticons, output, stats;
};

inline int run_label(const LabelArgs& a, std::ostream& err) {
  const auto seeds = seeds_from_json(read_json_file(a.lexicon, "lexicon"));
  const SynonymTable synonyms =
      a.synonyms.empty() ? SynonymTable{} : synonyms_from_json(read_json_file(a.synonyms, "synonym table"));
  const HashtagLexicon lexicon = expand_seed_lexicon(seeds, synonyms);
  const EmoticonTable table = a.emoticons.empty() ? EmoticonTable::defaults() : EmoticonTable::load(a.emoticons);

  std::vector<Tweet> tweets;
  for (auto& rec : read_corpus_file(a.input)) tweets.push_back(std::move(rec.tweet));
  const auto result = filter_and_label(tweets, lexicon, table);

  auto out = open_output(a.output);
  for (const auto& lt : result.labeled) write_labeled_line(out, lt.tweet, lt.label);
  if (!out) throw DataError("failed writing '" + a.output + "'");

  const std::string stats = to_json(result.stats).dump(2) + "\n";
  if (a.stats.empty()) {
    err << stats;
  } else {
    write_file(a.stats, stats);
  }
  err << "labeled " << result.stats.labeled_count << " of " << result.stats.input_count << " tweets (lexicon "
      << lexicon.size() << " words)\n";
  return kOk;
}

struct TrainArgs {
  std::string data, embeddings, config, out, history;
  std::optional<std::uint64_t> seed;
};

inline int run_train(const TrainArgs& a, std::ostream& err) {
  const auto config_json = read_json_file(a.config, "train config");
  TrainConfig train = train_config_from_json(config_json);
  const ModelConfig model = model_template_from_json(config_json);
  if (a.seed) {
    train.seed = *a.seed;
  } else if (auto s = env_seed()) {
    train.seed = *s;
  }

  const auto corpus = require_labels(read_corpus_file(a.data), a.data);
  std::optional<std::ofstream> history;
  if (!a.history.empty()) history = open_output(a.history);

  auto on_epoch = [&](const EpochRecord& rec, const ModelParams&) {
    err << "epoch " << rec.epoch << ": train_loss " << rec.train_loss << " train_acc " << rec.train_acc;
    if (rec.val_loss) err << " val_loss " << *rec.val_loss << " val_acc " << *rec.val_acc;
    err << '\n';
    if (history) *history << to_json(rec).dump() << '\n';
    return true;
  };
  const FitResult result = fit(corpus, a.embeddings, train, model, on_epoch);
  if (result.dropped_empty > 0) {
    err << "warning: dropped " << result.dropped_empty << " examples that were empty after preprocessing\n";
  }
  save_checkpoint(result.state, a.out);
  err << "trained on " << result.train_size << " examples (" << result.val_size << " validation), best epoch "
      << result.best_epoch << ", vocabulary " << result.state.vocab.size() << "; wrote " << a.out << '\n';
  return kOk;
}

struct EvaluateArgs {
  std::string model, data, report, matrix;
};

inline int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const ModelState state = load_checkpoint(a.model);
  const auto test = require_labels(read_corpus_file(a.data), a.data);
  const Evaluation ev = evaluate(state, test);
  out << format_report(ev.report);
  if (!a.report.empty()) write_file(a.report, to_json(ev.report).dump(2) + "\n");
  if (!a.matrix.empty()) write_file(a.matrix, matrix_csv(ev.report));
  return kOk;
}

struct PredictArgs {
  std::string model, text, input, output;
};

inline nlohmann::json prediction_json(const Tweet& t, const Probabilities& p) {
  nlohmann::json probs = nlohmann::json::object();
  for (EmotionClass c : kAllClasses) probs[std::string(to_string(c))] = p[index_of(c)];
  return {{"id", t.id}, {"text", t.text}, {"label", to_string(argmax_class(p))}, {"probabilities", probs}};
}

inline int run_predict(const PredictArgs& a, std::ostream& out) {
  const ModelState state = load_checkpoint(a.model);
  if (!a.input.empty()) {
    const auto rows = read_corpus_file(a.input);
    std::optional<std::ofstream> file;
    if (!a.output.empty()) file = open_output(a.output);
    std::ostream& sink = file ? static_cast<std::ostream&>(*file) : out;
    for (const auto& r : rows) sink << prediction_json(r.tweet, state.predict_proba(r.tweet.text)).dump() << '\n';
    return kOk;
  }
  const EmotionClass label = state.predict(a.text);
  if (!a.output.empty()) {
    write_file(a.output, prediction_json(Tweet{"text", a.text}, state.predict_proba(a.text)).dump() + "\n");
  }
  out << a.text << '\t' << to_string(label) << '\n';
  return kOk;
}

}  // namespace detail

/// Parses `args` (program name first) and runs one subcommand. Payloads go to
/// `out`, diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Four-quadrant emotion classification of short texts", "emoquad"};
  app.require_subcommand(1, 1);

  detail::LabelArgs label;
  auto* label_cmd = app.add_subcommand("label", "Weak-label raw tweets from their trailing emotion hashtags");
  label_cmd->add_option("--input", label.input, "Raw tweets (JSONL: id, text)")->required();
  label_cmd->add_option("--lexicon", label.lexicon, "Seed words per class (JSON)")->required();
  label_cmd->add_option("--synonyms", label.synonyms, "Synonym table (JSON)");
  label_cmd->add_option("--emoticons", label.emoticons, "Emoticon table (JSON)");
  label_cmd->add_option("--output", label.output, "Labeled tweets (JSONL)")->required();
  label_cmd->add_option("--stats", label.stats, "Labeling statistics (JSON); stderr when omitted");

  detail::TrainArgs train;
  std::uint64_t seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train the BiLSTM + convolution classifier");
  train_cmd->add_option("--data", train.data, "Labeled tweets (JSONL)")->required();
  train_cmd->add_option("--embeddings", train.embeddings, "Pretrained vectors (text: word f1 ... fd)")->required();
  train_cmd->add_option("--config", train.config, "Training configuration (JSON)")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint to write")->required();
  auto* seed_opt = train_cmd->add_option("--seed", seed, "Random seed (overrides config and EMOQUAD_SEED)");
  train_cmd->add_option("--history", train.history, "Per-epoch history (JSONL)");

  detail::EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on labeled tweets");
  eval_cmd->add_option("--model", evaluate.model, "Checkpoint")->required();
  eval_cmd->add_option("--data", evaluate.data, "Labeled test tweets (JSONL)")->required();
  eval_cmd->add_option("--report", evaluate.report, "Report (JSON)");
  eval_cmd->add_option("--matrix", evaluate.matrix, "Confusion matrices (CSV)");

  detail::PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict the emotion class of texts");
  predict_cmd->add_option("--model", predict.model, "Checkpoint")->required();
  auto* text_opt = predict_cmd->add_option("--text", predict.text, "A single text");
  auto* input_opt = predict_cmd->add_option("--input", predict.input, "Tweets (JSONL: id, text)");
  predict_cmd->add_option("--output", predict.output, "Predictions (JSONL)");
  text_opt->excludes(input_opt);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
    if (predict_cmd->parsed() && text_opt->count() == 0 && input_opt->count() == 0) {
      throw CLI::RequiredError("predict needs --text or --input");
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* scope = &app;
    for (const auto* sub : app.get_subcommands()) scope = sub;
    err << scope->help();
    return kUsage;
  }
  if (seed_opt->count() > 0) train.seed = seed;

  try {
    if (label_cmd->parsed()) return detail::run_label(label, err);
    if (train_cmd->parsed()) return detail::run_train(train, err);
    if (eval_cmd->parsed()) return detail::run_evaluate(evaluate, out);
    return detail::run_predict(predict, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace emoquad::cli

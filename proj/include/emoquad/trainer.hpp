#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"
#include "emoquad/model.hpp"
#include "emoquad/nn.hpp"
#include "emoquad/preprocessor.hpp"
#include "emoquad/rng.hpp"
#include "emoquad/vocab.hpp"

namespace emoquad {

struct TrainConfig {
  std::size_t max_words = 40000;
  std::size_t max_len = 30;
  std::size_t embed_dim = 200;
  double val_split = 0.2;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::uint64_t seed = 42;

  void validate() const {
    if (max_words < 1) throw DataError("train config: max_words must be at least 1");
    if (max_len < 1) throw DataError("train config: max_len must be at least 1");
    if (embed_dim < 1) throw DataError("train config: embed_dim must be at least 1");
    if (!(val_split > 0.0 && val_split < 1.0)) throw DataError("train config: val_split must be in (0, 1)");
    if (batch_size < 1) throw DataError("train config: batch_size must be at least 1");
    if (!(learning_rate > 0.0) || !(epsilon > 0.0)) {
      throw DataError("train config: learning_rate and epsilon must be positive");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
      throw DataError("train config: beta1 and beta2 must be in (0, 1)");
    }
    if (max_epochs < 1) throw DataError("train config: max_epochs must be at least 1");
    if (patience < 1) throw DataError("train config: patience must be at least 1");
  }

  bool operator==(const TrainConfig&) const = default;
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{{"max_words", c.max_words},   {"max_len", c.max_len},
                        {"embed_dim", c.embed_dim},   {"val_split", c.val_split},
                        {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
                        {"beta1", c.beta1},           {"beta2", c.beta2},
                        {"epsilon", c.epsilon},       {"max_epochs", c.max_epochs},
                        {"patience", c.patience},     {"seed", c.seed}};
}

/// Reads a TrainConfig, starting from defaults. Unknown keys are rejected.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "max_words") c.max_words = value.get<std::size_t>();
      else if (key == "max_len") c.max_len = value.get<std::size_t>();
      else if (key == "embed_dim") c.embed_dim = value.get<std::size_t>();
      else if (key == "val_split") c.val_split = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "beta1") c.beta1 = value.get<double>();
      else if (key == "beta2") c.beta2 = value.get<double>();
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
      else if (key == "patience") c.patience = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key != "model") throw DataError("train config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Architecture fields of the optional "model" object; sizes tied to data
/// (vocab_size, embed_dim, max_len) come from the TrainConfig at fit time.
inline ModelConfig model_template_from_json(const nlohmann::json& j) {
  ModelConfig m;
  if (!j.contains("model")) return m;
  const auto& mj = j.at("model");
  if (!mj.is_object()) throw DataError("train config: \"model\" must be an object");
  try {
    for (const auto& [key, value] : mj.items()) {
      if (key == "lstm_hidden") m.lstm_hidden = value.get<std::size_t>();
      else if (key == "lstm_layers") m.lstm_layers = value.get<std::size_t>();
      else if (key == "conv_filters") m.conv_filters = value.get<std::size_t>();
      else if (key == "conv_kernel") m.conv_kernel = value.get<std::size_t>();
      else if (key == "dropout_rate") m.dropout_rate = value.get<double>();
      else throw DataError("train config: unknown model key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  return m;
}

inline constexpr double kProbabilityFloor = 1e-12;

/// -log p_gold with p clamped at 1e-12.
inline double cross_entropy(const Probabilities& p, EmotionClass gold) {
  return -std::log(std::max(p[index_of(gold)], kProbabilityFloor));
}

/// Seeded shuffle, then the last floor(n * val_split) items form the
/// validation set.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_val(std::vector<T> data, double val_split,
                                                          std::uint64_t seed) {
  if (data.empty()) throw DataError("cannot split an empty dataset");
  if (!(val_split > 0.0 && val_split < 1.0)) throw DataError("val_split must be in (0, 1)");
  Rng rng(seed);
  rng.shuffle(data);
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(data.size()) * val_split));
  std::vector<T> val(std::make_move_iterator(data.end() - static_cast<std::ptrdiff_t>(n_val)),
                     std::make_move_iterator(data.end()));
  data.resize(data.size() - n_val);
  return {std::move(data), std::move(val)};
}

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline AdamHyper adam_hyper(const TrainConfig& c) {
  return {c.learning_rate, c.beta1, c.beta2, c.epsilon};
}

/// One bias-corrected Adam step at step number t >= 1, elementwise.
inline void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                        std::span<double> v, std::size_t t, const AdamHyper& hp) {
  if (grad.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size()) {
    throw StructuralError("adam_update: shape mismatch");
  }
  if (t < 1) throw StructuralError("adam_update: step must be >= 1");
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * grad[i];
    v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    theta[i] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
  }
}

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::size_t step = 0;

  explicit AdamState(const ModelParams& params)
      : m(ModelParams::zeros_like(params)), v(ModelParams::zeros_like(params)) {}
};

/// Adam over every tensor; the PAD embedding row is never touched.
inline void adam_update(ModelParams& params, const ModelParams& grads, AdamState& state,
                        const AdamHyper& hp) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw StructuralError("adam_update: parameter layout mismatch");
  }
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::size_t skip = i == 0 ? params.tensor(0).dim(1) : 0;
    adam_update(params.tensor(i).data().subspan(skip), grads.tensor(i).data().subspan(skip),
                state.m.tensor(i).data().subspan(skip), state.v.tensor(i).data().subspan(skip),
                state.step, hp);
  }
}

/// Everything needed for inference and for resuming evaluation.
struct ModelState {
  TrainConfig train;
  ModelConfig model;
  Vocabulary vocab;
  ModelParams params;

  std::vector<std::size_t> encode(std::string_view text) const {
    return encode_pad(preprocess(text), vocab, model.max_len);
  }

  Probabilities predict_proba(std::string_view text) const {
    return model_forward(encode(text), params, model, Mode::Eval).probs;
  }

  EmotionClass predict(std::string_view text) const { return argmax_class(predict_proba(text)); }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_acc;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"train_acc", r.train_acc}};
  j["val_loss"] = r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json(nullptr);
  j["val_acc"] = r.val_acc ? nlohmann::json(*r.val_acc) : nlohmann::json(nullptr);
  return j;
}

struct FitResult {
  ModelState state;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::size_t dropped_empty = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

/// Return false to stop training after this epoch.
using EpochCallback = std::function<bool(const EpochRecord&, const ModelParams&)>;

struct EncodedExample {
  std::vector<std::size_t> ids;
  EmotionClass label;
};

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean eval-mode loss and accuracy.
inline LossAccuracy measure(const std::vector<EncodedExample>& data, const ModelParams& params,
                            const ModelConfig& config) {
  LossAccuracy out;
  if (data.empty()) return out;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const auto probs = model_forward(ex.ids, params, config, Mode::Eval).probs;
    out.loss += cross_entropy(probs, ex.label);
    if (argmax_class(probs) == ex.label) ++correct;
  }
  out.loss /= static_cast<double>(data.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return out;
}

namespace detail {

inline void require_all_classes(const std::vector<std::pair<std::vector<std::string>, EmotionClass>>& rows,
                                std::string_view where) {
  std::set<EmotionClass> present;
  for (const auto& r : rows) present.insert(r.second);
  for (EmotionClass c : kAllClasses) {
    if (present.count(c) == 0) {
      throw DataError("class " + std::string(to_string(c)) + " absent from " + std::string(where));
    }
  }
}

}  // namespace detail

/// Minibatch Adam training with early stopping on validation loss. Returns the
/// parameters of the best epoch. `embeddings_path` may be empty, in which case
/// every embedding row is randomly initialized.
inline FitResult fit(const std::vector<LabeledTweet>& corpus, const std::string& embeddings_path,
                     const TrainConfig& train, ModelConfig model, const EpochCallback& on_epoch = {}) {
  train.validate();
  FitResult result;

  std::vector<std::pair<std::vector<std::string>, EmotionClass>> rows;
  rows.reserve(corpus.size());
  for (const auto& lt : corpus) {
    auto tokens = preprocess(lt.tweet.text);
    if (tokens.empty()) {
      ++result.dropped_empty;
      continue;
    }
    rows.emplace_back(std::move(tokens), lt.label);
  }
  if (rows.empty()) throw DataError("no training examples left after preprocessing");
  detail::require_all_classes(rows, "training data");

  auto [train_rows, val_rows] = split_train_val(std::move(rows), train.val_split, train.seed);
  detail::require_all_classes(train_rows, "the training split");
  result.train_size = train_rows.size();
  result.val_size = val_rows.size();

  std::vector<std::vector<std::string>> train_tokens;
  train_tokens.reserve(train_rows.size());
  for (const auto& r : train_rows) train_tokens.push_back(r.first);
  Vocabulary vocab = build_vocab(train_tokens, train.max_words);

  model.vocab_size = vocab.size();
  model.embed_dim = train.embed_dim;
  model.max_len = train.max_len;
  model.validate();

  Rng rng(train.seed);
  const std::uint64_t embed_seed = rng.next();
  Tensor embedding;
  if (embeddings_path.empty()) {
    std::istringstream none;
    embedding = load_embedding_matrix(none, "<none>", vocab, train.embed_dim, embed_seed);
  } else {
    embedding = load_embedding_matrix(embeddings_path, vocab, train.embed_dim, embed_seed);
  }
  ModelParams params = init_params(model, rng, &embedding);

  auto encode_all = [&](const auto& rs) {
    std::vector<EncodedExample> out;
    out.reserve(rs.size());
    for (const auto& r : rs) out.push_back({encode_pad(r.first, vocab, train.max_len), r.second});
    return out;
  };
  const std::vector<EncodedExample> train_set = encode_all(train_rows);
  const std::vector<EncodedExample> val_set = encode_all(val_rows);

  AdamState adam(params);
  const AdamHyper hp = adam_hyper(train);
  ModelParams grads = ModelParams::zeros_like(params);
  ModelParams best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= train.max_epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), start + train.batch_size);
      grads.set_zero();
      for (std::size_t k = start; k < end; ++k) {
        const EncodedExample& ex = train_set[order[k]];
        ForwardResult fr;
        try {
          fr = model_forward(ex.ids, params, model, Mode::Train, &rng);
        } catch (const NumericError& e) {
          throw NumericError("numeric divergence at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(batch_no) + " (" + e.what() + ")");
        }
        const double loss = cross_entropy(fr.probs, ex.label);
        if (!std::isfinite(loss)) {
          throw NumericError("numeric divergence at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(batch_no));
        }
        model_backward(fr.cache, ex.label, params, grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = 0; i < grads.size(); ++i) grads.tensor(i).vector() *= scale;
      if (!grads.all_finite()) {
        throw NumericError("numeric divergence at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batch_no) + " (non-finite gradient)");
      }
      adam_update(params, grads, adam, hp);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const LossAccuracy tr = measure(train_set, params, model);
    rec.train_loss = tr.loss;
    rec.train_acc = tr.accuracy;
    double selection_loss = tr.loss;
    if (!val_set.empty()) {
      const LossAccuracy va = measure(val_set, params, model);
      rec.val_loss = va.loss;
      rec.val_acc = va.accuracy;
      selection_loss = va.loss;
    }
    if (!std::isfinite(selection_loss)) {
      throw NumericError("numeric divergence at epoch " + std::to_string(epoch) + " (loss is not finite)");
    }
    result.history.push_back(rec);

    if (selection_loss < best_loss) {
      best_loss = selection_loss;
      best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch && !on_epoch(rec, params)) break;
    if (since_best >= train.patience) break;
  }

  result.state = ModelState{train, model, std::move(vocab), std::move(best)};
  return result;
}

}  // namespace emoquad

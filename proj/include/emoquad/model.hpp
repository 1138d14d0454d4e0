#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"
#include "emoquad/rng.hpp"
#include "emoquad/tensor.hpp"
#include "emoquad/vocab.hpp"

namespace emoquad {

struct ModelConfig {
  std::size_t vocab_size = 2;
  std::size_t embed_dim = 200;
  std::size_t max_len = 30;
  std::size_t lstm_hidden = 64;  // per direction
  std::size_t lstm_layers = 2;
  std::size_t conv_filters = 64;
  std::size_t conv_kernel = 3;
  std::size_t num_classes = kNumClasses;
  double dropout_rate = 0.5;

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw DataError(std::string("model config: ") + name + " must be positive");
    };
    positive(vocab_size, "vocab_size");
    positive(embed_dim, "embed_dim");
    positive(max_len, "max_len");
    positive(lstm_hidden, "lstm_hidden");
    positive(lstm_layers, "lstm_layers");
    positive(conv_filters, "conv_filters");
    if (vocab_size < 2) throw DataError("model config: vocab_size must cover PAD and UNK");
    if (conv_kernel == 0 || conv_kernel % 2 == 0) {
      throw DataError("model config: conv_kernel must be odd");
    }
    if (num_classes != kNumClasses) throw DataError("model config: num_classes must be 4");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw DataError("model config: dropout_rate must be in [0, 1)");
    }
  }

  std::size_t layer_input(std::size_t layer) const {
    return layer == 0 ? embed_dim : 2 * lstm_hidden;
  }

  bool operator==(const ModelConfig&) const = default;
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"vocab_size", c.vocab_size},     {"embed_dim", c.embed_dim},
                        {"max_len", c.max_len},           {"lstm_hidden", c.lstm_hidden},
                        {"lstm_layers", c.lstm_layers},   {"conv_filters", c.conv_filters},
                        {"conv_kernel", c.conv_kernel},   {"num_classes", c.num_classes},
                        {"dropout_rate", c.dropout_rate}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.lstm_layers = j.at("lstm_layers").get<std::size_t>();
  c.conv_filters = j.at("conv_filters").get<std::size_t>();
  c.conv_kernel = j.at("conv_kernel").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  return c;
}

enum class Direction { Forward = 0, Backward = 1 };

/// Named parameter tensors in a fixed enumeration order:
///   embedding
///   lstm.<layer>.{fwd,bwd}.{W,U,b}   for each layer
///   conv.K, conv.b, dense.D, dense.b
/// W is (4h x in), U is (4h x h), b is (4h); gate blocks are ordered i, f, g, o.
/// conv.K is (filters x in x kernel); dense.D is (classes x filters).
class ModelParams {
 public:
  ModelParams() = default;

  /// Zero tensors with the shapes implied by `config`.
  explicit ModelParams(const ModelConfig& config) : layers_(config.lstm_layers) {
    const std::size_t h = config.lstm_hidden;
    add_zero("embedding", {config.vocab_size, config.embed_dim});
    for (std::size_t l = 0; l < config.lstm_layers; ++l) {
      for (const char* dir : {"fwd", "bwd"}) {
        const std::string prefix = "lstm." + std::to_string(l) + "." + dir + ".";
        add_zero(prefix + "W", {4 * h, config.layer_input(l)});
        add_zero(prefix + "U", {4 * h, h});
        add_zero(prefix + "b", {4 * h});
      }
    }
    add_zero("conv.K", {config.conv_filters, 2 * h, config.conv_kernel});
    add_zero("conv.b", {config.conv_filters});
    add_zero("dense.D", {config.num_classes, config.conv_filters});
    add_zero("dense.b", {config.num_classes});
  }

  static ModelParams zeros_like(const ModelParams& other) {
    ModelParams p;
    p.layers_ = other.layers_;
    for (std::size_t i = 0; i < other.size(); ++i) {
      p.add_zero(other.names_[i], other.tensors_[i].shape());
    }
    return p;
  }

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor& tensor(std::size_t i) { return tensors_.at(i); }
  const Tensor& tensor(std::size_t i) const { return tensors_.at(i); }

  Tensor& get(const std::string& name) { return tensors_.at(find(name)); }
  const Tensor& get(const std::string& name) const { return tensors_.at(find(name)); }

  std::size_t lstm_layers() const { return layers_; }

  Tensor& embedding() { return tensors_[0]; }
  const Tensor& embedding() const { return tensors_[0]; }
  // which: 0 = W, 1 = U, 2 = b
  Tensor& lstm(std::size_t layer, Direction d, std::size_t which) {
    return tensors_[1 + 6 * layer + 3 * static_cast<std::size_t>(d) + which];
  }
  const Tensor& lstm(std::size_t layer, Direction d, std::size_t which) const {
    return tensors_[1 + 6 * layer + 3 * static_cast<std::size_t>(d) + which];
  }
  Tensor& conv_kernel() { return tensors_[1 + 6 * layers_]; }
  const Tensor& conv_kernel() const { return tensors_[1 + 6 * layers_]; }
  Tensor& conv_bias() { return tensors_[2 + 6 * layers_]; }
  const Tensor& conv_bias() const { return tensors_[2 + 6 * layers_]; }
  Tensor& dense_weights() { return tensors_[3 + 6 * layers_]; }
  const Tensor& dense_weights() const { return tensors_[3 + 6 * layers_]; }
  Tensor& dense_bias() { return tensors_[4 + 6 * layers_]; }
  const Tensor& dense_bias() const { return tensors_[4 + 6 * layers_]; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  void set_zero() {
    for (auto& t : tensors_) t.fill(0.0);
  }

  bool all_finite() const {
    return std::all_of(tensors_.begin(), tensors_.end(), [](const Tensor& t) { return t.all_finite(); });
  }

  /// Checks names and shapes against `config`.
  void check_shapes(const ModelConfig& config) const {
    const ModelParams expected(config);
    if (expected.size() != size()) throw StructuralError("parameter count does not match config");
    for (std::size_t i = 0; i < size(); ++i) {
      if (expected.names_[i] != names_[i] || expected.tensors_[i].shape() != tensors_[i].shape()) {
        throw StructuralError("parameter '" + names_[i] + "' has shape " +
                              shape_string(tensors_[i].shape()) + ", expected " +
                              shape_string(expected.tensors_[i].shape()));
      }
    }
  }

  /// Appends a tensor; used when rebuilding from a checkpoint.
  void add(const std::string& name, Tensor t) {
    if (index_.count(name) != 0) throw StructuralError("duplicate parameter name '" + name + "'");
    index_.emplace(name, tensors_.size());
    names_.push_back(name);
    tensors_.push_back(std::move(t));
    if (name.starts_with("lstm.")) {
      layers_ = std::max(layers_, std::stoul(name.substr(5)) + 1);
    }
  }

  bool operator==(const ModelParams& o) const { return names_ == o.names_ && tensors_ == o.tensors_; }

 private:
  void add_zero(const std::string& name, std::vector<std::size_t> shape) { add(name, Tensor(std::move(shape))); }

  std::size_t find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw StructuralError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t layers_ = 0;
};

namespace detail {

inline void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
}

}  // namespace detail

/// Glorot-uniform weights, zero biases except forget-gate bias 1.0. The
/// embedding gets uniform(-0.05, 0.05) rows with a zero PAD row unless
/// `embedding` is supplied.
inline ModelParams init_params(const ModelConfig& config, Rng& rng, const Tensor* embedding = nullptr) {
  config.validate();
  ModelParams p(config);
  const std::size_t h = config.lstm_hidden;
  if (embedding != nullptr) {
    if (embedding->shape() != p.embedding().shape()) {
      throw StructuralError("embedding matrix shape " + shape_string(embedding->shape()) +
                            " does not match config " + shape_string(p.embedding().shape()));
    }
    p.embedding() = *embedding;
  } else {
    for (double& v : p.embedding().values()) v = rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
  }
  for (double& v : p.embedding().row(kPadId)) v = 0.0;

  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    for (Direction d : {Direction::Forward, Direction::Backward}) {
      detail::glorot_uniform(p.lstm(l, d, 0), config.layer_input(l), 4 * h, rng);
      detail::glorot_uniform(p.lstm(l, d, 1), h, 4 * h, rng);
      Tensor& b = p.lstm(l, d, 2);
      for (std::size_t k = h; k < 2 * h; ++k) b[k] = 1.0;
    }
  }
  detail::glorot_uniform(p.conv_kernel(), 2 * h * config.conv_kernel,
                         config.conv_filters * config.conv_kernel, rng);
  detail::glorot_uniform(p.dense_weights(), config.conv_filters, config.num_classes, rng);
  return p;
}

}  // namespace emoquad

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"
#include "emoquad/model.hpp"
#include "emoquad/rng.hpp"
#include "emoquad/tensor.hpp"

namespace emoquad {

using Probabilities = std::array<double, kNumClasses>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// One LSTM step with gate blocks (i, f, g, o) stacked in W (4h x in),
/// U (4h x h) and b (4h).
inline LstmState lstm_cell_step(std::span<const double> x, const Eigen::VectorXd& h_prev,
                                const Eigen::VectorXd& c_prev, const Tensor& W, const Tensor& U,
                                const Tensor& b) {
  const auto h = static_cast<Eigen::Index>(U.dim(1));
  if (W.dim(0) != 4 * U.dim(1) || U.dim(0) != W.dim(0) || b.size() != W.dim(0) ||
      W.dim(1) != x.size() || h_prev.size() != h || c_prev.size() != h) {
    throw StructuralError("lstm_cell_step: inconsistent shapes");
  }
  ConstVectorMap xv(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd a = W.matrix() * xv + U.matrix() * h_prev + b.vector();
  LstmState out{Eigen::VectorXd(h), Eigen::VectorXd(h)};
  for (Eigen::Index k = 0; k < h; ++k) {
    const double i = sigmoid(a[k]);
    const double f = sigmoid(a[h + k]);
    const double g = std::tanh(a[2 * h + k]);
    const double o = sigmoid(a[3 * h + k]);
    out.c[k] = f * c_prev[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

/// Per-step activations of one LSTM direction, indexed by time step.
struct DirectionCache {
  Tensor i, f, g, o;  // (T x h) gate activations
  Tensor c, tanh_c;   // (T x h)
  Tensor h;           // (T x h)
};

struct LayerCache {
  Tensor input;  // (T x in)
  DirectionCache fwd;
  DirectionCache bwd;
  Tensor output;  // (T x 2h), forward half first
};

namespace detail {

// Runs one direction over X. With `reversed` the recurrence starts at the
// last step; outputs stay indexed by the original time step.
inline DirectionCache lstm_direction(const Tensor& X, const Tensor& W, const Tensor& U,
                                     const Tensor& b, bool reversed) {
  const std::size_t T = X.dim(0);
  const std::size_t hs = U.dim(1);
  const auto h = static_cast<Eigen::Index>(hs);
  if (W.dim(1) != X.dim(1) || W.dim(0) != 4 * hs || U.dim(0) != 4 * hs || b.size() != 4 * hs) {
    throw StructuralError("lstm: weight shapes do not match input " + shape_string(X.shape()));
  }
  DirectionCache dc{Tensor({T, hs}), Tensor({T, hs}), Tensor({T, hs}), Tensor({T, hs}),
                    Tensor({T, hs}), Tensor({T, hs}), Tensor({T, hs})};

  Eigen::MatrixXd A = X.matrix() * W.matrix().transpose();
  A.rowwise() += b.vector().transpose();

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd a(4 * h);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reversed ? T - 1 - s : s;
    a.noalias() = A.row(static_cast<Eigen::Index>(t)).transpose();
    a.noalias() += U.matrix() * h_prev;
    for (Eigen::Index k = 0; k < h; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double i = sigmoid(a[k]);
      const double f = sigmoid(a[h + k]);
      const double g = std::tanh(a[2 * h + k]);
      const double o = sigmoid(a[3 * h + k]);
      const double c = f * c_prev[k] + i * g;
      const double tc = std::tanh(c);
      dc.i.at(t, kk) = i;
      dc.f.at(t, kk) = f;
      dc.g.at(t, kk) = g;
      dc.o.at(t, kk) = o;
      dc.c.at(t, kk) = c;
      dc.tanh_c.at(t, kk) = tc;
      dc.h.at(t, kk) = o * tc;
      c_prev[k] = c;
      h_prev[k] = o * tc;
    }
  }
  return dc;
}

// Backpropagation through time for one direction. `dH` is the gradient with
// respect to this direction's hidden outputs. Accumulates dW, dU, db and
// adds the input gradient into dX.
inline void lstm_direction_backward(const Tensor& X, const DirectionCache& dc, const Tensor& dH,
                                    const Tensor& W, const Tensor& U, bool reversed, Tensor& dW,
                                    Tensor& dU, Tensor& db, Eigen::MatrixXd& dX) {
  const std::size_t T = X.dim(0);
  const std::size_t hs = U.dim(1);
  const auto h = static_cast<Eigen::Index>(hs);

  Eigen::MatrixXd dA(static_cast<Eigen::Index>(T), 4 * h);
  Eigen::MatrixXd H_prev = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), h);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);

  for (std::size_t s = T; s-- > 0;) {
    const std::size_t t = reversed ? T - 1 - s : s;
    const bool has_prev = s > 0;
    const std::size_t tp = reversed ? t + 1 : t - 1;  // valid only when has_prev
    for (Eigen::Index k = 0; k < h; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double i = dc.i.at(t, kk);
      const double f = dc.f.at(t, kk);
      const double g = dc.g.at(t, kk);
      const double o = dc.o.at(t, kk);
      const double tc = dc.tanh_c.at(t, kk);
      const double c_prev = has_prev ? dc.c.at(tp, kk) : 0.0;

      const double dh = dH.at(t, kk) + dh_next[k];
      const double dout = dh * tc;
      const double dc_total = dh * o * (1.0 - tc * tc) + dc_next[k];
      const double di = dc_total * g;
      const double dg = dc_total * i;
      const double df = dc_total * c_prev;
      dc_next[k] = dc_total * f;

      const auto row = static_cast<Eigen::Index>(t);
      dA(row, k) = di * i * (1.0 - i);
      dA(row, h + k) = df * f * (1.0 - f);
      dA(row, 2 * h + k) = dg * (1.0 - g * g);
      dA(row, 3 * h + k) = dout * o * (1.0 - o);
      if (has_prev) H_prev(row, k) = dc.h.at(tp, kk);
    }
    dh_next.noalias() = U.matrix().transpose() * dA.row(static_cast<Eigen::Index>(t)).transpose();
  }

  dW.matrix().noalias() += dA.transpose() * X.matrix();
  dU.matrix().noalias() += dA.transpose() * H_prev;
  db.vector().noalias() += dA.colwise().sum().transpose();
  dX.noalias() += dA * W.matrix();
}

// im2col for same-length convolution: row t holds H[t + j - pad][c] at
// column c * k + j, zero outside the sequence.
inline Tensor conv_patches(const Tensor& H, std::size_t k) {
  const std::size_t T = H.dim(0);
  const std::size_t C = H.dim(1);
  const std::size_t pad = (k - 1) / 2;
  Tensor P({T, C * k});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t src = t + j;
      if (src < pad || src - pad >= T) continue;
      for (std::size_t c = 0; c < C; ++c) P.at(t, c * k + j) = H.at(src - pad, c);
    }
  }
  return P;
}

}  // namespace detail

/// Stacked bidirectional LSTM layer. Output row t is (forward h_t, backward h_t).
inline LayerCache bilstm_layer_forward(const Tensor& X, const ModelParams& params, std::size_t layer) {
  LayerCache lc;
  lc.input = X;
  lc.fwd = detail::lstm_direction(X, params.lstm(layer, Direction::Forward, 0),
                                  params.lstm(layer, Direction::Forward, 1),
                                  params.lstm(layer, Direction::Forward, 2), false);
  lc.bwd = detail::lstm_direction(X, params.lstm(layer, Direction::Backward, 0),
                                  params.lstm(layer, Direction::Backward, 1),
                                  params.lstm(layer, Direction::Backward, 2), true);
  const std::size_t T = X.dim(0);
  const std::size_t h = lc.fwd.h.dim(1);
  lc.output = Tensor({T, 2 * h});
  auto out = lc.output.matrix();
  out.leftCols(static_cast<Eigen::Index>(h)) = lc.fwd.h.matrix();
  out.rightCols(static_cast<Eigen::Index>(h)) = lc.bwd.h.matrix();
  return lc;
}

/// Runs every BiLSTM layer of `params` over X (T x d) and returns the last
/// layer's output (T x 2h).
inline Tensor bilstm_forward(const Tensor& X, const ModelParams& params) {
  Tensor current = X;
  for (std::size_t l = 0; l < params.lstm_layers(); ++l) {
    current = bilstm_layer_forward(current, params, l).output;
  }
  return current;
}

struct ConvResult {
  Tensor patches;  // (T x C*k)
  Tensor pre;      // (T x F) before ReLU
  Tensor out;      // (T x F)
};

/// Same-length 1D convolution (zero padding (k-1)/2 per side) followed by ReLU.
/// K is (F x C x k).
inline ConvResult conv1d_forward(const Tensor& H, const Tensor& K, const Tensor& bias) {
  if (K.rank() != 3 || K.dim(1) != H.dim(1) || bias.size() != K.dim(0)) {
    throw StructuralError("conv1d: kernel " + shape_string(K.shape()) + " does not fit input " +
                          shape_string(H.shape()));
  }
  if (K.dim(2) % 2 == 0) throw StructuralError("conv1d: kernel width must be odd");
  ConvResult r;
  r.patches = detail::conv_patches(H, K.dim(2));
  r.pre = Tensor({H.dim(0), K.dim(0)});
  r.pre.matrix().noalias() = r.patches.matrix() * K.matrix().transpose();
  r.pre.matrix().rowwise() += bias.vector().transpose();
  r.out = r.pre;
  for (double& v : r.out.values()) v = v > 0.0 ? v : 0.0;
  return r;
}

struct PoolResult {
  Tensor pooled;                    // (F)
  std::vector<std::size_t> argmax;  // first maximizing time step per filter
};

inline PoolResult global_max_pool(const Tensor& C) {
  if (C.rank() != 2 || C.dim(0) == 0) throw StructuralError("global_max_pool: need (T x F), T >= 1");
  const std::size_t T = C.dim(0);
  const std::size_t F = C.dim(1);
  PoolResult r{Tensor({F}), std::vector<std::size_t>(F, 0)};
  for (std::size_t f = 0; f < F; ++f) {
    double best = C.at(0, f);
    for (std::size_t t = 1; t < T; ++t) {
      if (C.at(t, f) > best) {
        best = C.at(t, f);
        r.argmax[f] = t;
      }
    }
    r.pooled[f] = best;
  }
  return r;
}

/// Max-shifted softmax.
inline Probabilities softmax(std::span<const double> logits) {
  if (logits.size() != kNumClasses) throw StructuralError("softmax: expected 4 logits");
  double m = logits[0];
  for (double z : logits) m = std::max(m, z);
  Probabilities p{};
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    p[k] = std::exp(logits[k] - m);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

struct DenseResult {
  Tensor logits;  // (4)
  Probabilities probs{};
};

inline DenseResult dense_softmax(const Tensor& input, const Tensor& D, const Tensor& bias) {
  if (D.rank() != 2 || D.dim(1) != input.size() || D.dim(0) != kNumClasses || bias.size() != kNumClasses) {
    throw StructuralError("dense: weights " + shape_string(D.shape()) + " do not fit input " +
                          shape_string(input.shape()));
  }
  DenseResult r;
  r.logits = Tensor({kNumClasses});
  r.logits.vector().noalias() = D.matrix() * input.vector() + bias.vector();
  r.probs = softmax(r.logits.data());
  return r;
}

/// Lowest index wins ties.
inline EmotionClass argmax_class(const Probabilities& p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumClasses; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return class_at(best);
}

enum class Mode { Train, Eval };

/// Everything backward needs from a forward pass.
struct ForwardCache {
  bool valid = false;
  std::vector<std::size_t> ids;
  Tensor embedded;  // (T x d)
  std::vector<LayerCache> layers;
  ConvResult conv;
  PoolResult pool;
  std::vector<double> dropout_scale;  // per filter; 1.0 everywhere in eval mode
  Tensor dropped;                     // (F) pooled * dropout_scale
  DenseResult dense;
};

struct ForwardResult {
  Probabilities probs{};
  ForwardCache cache;
};

namespace detail {

inline ForwardResult forward_impl(std::span<const std::size_t> ids, const ModelParams& params,
                                  const ModelConfig& config, std::vector<double> dropout_scale) {
  if (ids.size() != config.max_len) {
    throw StructuralError("model_forward: expected " + std::to_string(config.max_len) + " ids, got " +
                          std::to_string(ids.size()));
  }
  const Tensor& E = params.embedding();
  ForwardResult r;
  ForwardCache& fc = r.cache;
  fc.ids.assign(ids.begin(), ids.end());
  fc.embedded = Tensor({ids.size(), E.dim(1)});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= E.dim(0)) {
      throw StructuralError("token id " + std::to_string(ids[t]) + " out of vocabulary range " +
                            std::to_string(E.dim(0)));
    }
    auto src = E.row(ids[t]);
    std::copy(src.begin(), src.end(), fc.embedded.row(t).begin());
  }

  const Tensor* current = &fc.embedded;
  fc.layers.reserve(params.lstm_layers());
  for (std::size_t l = 0; l < params.lstm_layers(); ++l) {
    fc.layers.push_back(bilstm_layer_forward(*current, params, l));
    current = &fc.layers.back().output;
  }
  fc.conv = conv1d_forward(*current, params.conv_kernel(), params.conv_bias());
  fc.pool = global_max_pool(fc.conv.out);

  fc.dropout_scale = std::move(dropout_scale);
  fc.dropped = fc.pool.pooled;
  for (std::size_t f = 0; f < fc.dropped.size(); ++f) fc.dropped[f] *= fc.dropout_scale[f];

  fc.dense = dense_softmax(fc.dropped, params.dense_weights(), params.dense_bias());
  for (double p : fc.dense.probs) {
    if (!std::isfinite(p)) throw NumericError("non-finite class probability");
  }
  fc.valid = true;
  r.probs = fc.dense.probs;
  return r;
}

}  // namespace detail

/// Inverted-dropout scale factors: 0 for dropped filters, 1/(1-rate) otherwise.
inline std::vector<double> draw_dropout_scale(std::size_t filters, double rate, Rng& rng) {
  std::vector<double> scale(filters, 1.0);
  if (rate <= 0.0) return scale;
  const double keep = 1.0 / (1.0 - rate);
  for (double& s : scale) s = rng.uniform() < rate ? 0.0 : keep;
  return scale;
}

/// Embedding lookup, stacked BiLSTM, conv1d + ReLU, global max pool, dropout
/// (train mode only) and dense softmax. Eval mode ignores `dropout_rng`.
inline ForwardResult model_forward(std::span<const std::size_t> ids, const ModelParams& params,
                                   const ModelConfig& config, Mode mode, Rng* dropout_rng = nullptr) {
  std::vector<double> scale(config.conv_filters, 1.0);
  if (mode == Mode::Train && config.dropout_rate > 0.0) {
    if (dropout_rng == nullptr) throw StructuralError("train-mode forward needs a dropout rng");
    scale = draw_dropout_scale(config.conv_filters, config.dropout_rate, *dropout_rng);
  }
  return detail::forward_impl(ids, params, config, std::move(scale));
}

/// Train-mode forward with a fixed dropout scale vector.
inline ForwardResult model_forward(std::span<const std::size_t> ids, const ModelParams& params,
                                   const ModelConfig& config, std::span<const double> dropout_scale) {
  if (dropout_scale.size() != config.conv_filters) {
    throw StructuralError("dropout scale must have one entry per filter");
  }
  return detail::forward_impl(ids, params, config, {dropout_scale.begin(), dropout_scale.end()});
}

/// Cross-entropy gradient of one example, added into `grads` (same layout
/// as `params`). The PAD embedding row receives no gradient.
inline void model_backward(const ForwardCache& cache, EmotionClass gold, const ModelParams& params,
                           ModelParams& grads) {
  if (!cache.valid) throw StructuralError("model_backward: missing forward cache");
  if (grads.size() != params.size()) throw StructuralError("model_backward: gradient layout mismatch");

  // Softmax + cross-entropy: dL/dz = p - onehot(gold).
  Eigen::VectorXd dz(static_cast<Eigen::Index>(kNumClasses));
  for (std::size_t k = 0; k < kNumClasses; ++k) dz[static_cast<Eigen::Index>(k)] = cache.dense.probs[k];
  dz[static_cast<Eigen::Index>(index_of(gold))] -= 1.0;

  grads.dense_weights().matrix().noalias() += dz * cache.dropped.vector().transpose();
  grads.dense_bias().vector() += dz;
  Eigen::VectorXd dpooled = params.dense_weights().matrix().transpose() * dz;
  for (std::size_t f = 0; f < cache.dropout_scale.size(); ++f) {
    dpooled[static_cast<Eigen::Index>(f)] *= cache.dropout_scale[f];
  }

  // Max pool routes to the argmax step, ReLU gates on the pre-activation.
  const std::size_t T = cache.conv.pre.dim(0);
  const std::size_t F = cache.conv.pre.dim(1);
  Eigen::MatrixXd dpre = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(F));
  for (std::size_t f = 0; f < F; ++f) {
    const std::size_t t = cache.pool.argmax[f];
    if (cache.conv.pre.at(t, f) > 0.0) {
      dpre(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = dpooled[static_cast<Eigen::Index>(f)];
    }
  }
  grads.conv_kernel().matrix().noalias() += dpre.transpose() * cache.conv.patches.matrix();
  grads.conv_bias().vector().noalias() += dpre.colwise().sum().transpose();
  const Eigen::MatrixXd dpatches = dpre * params.conv_kernel().matrix();

  // col2im
  const Tensor& top = cache.layers.back().output;
  const std::size_t C = top.dim(1);
  const std::size_t k = params.conv_kernel().dim(2);
  const std::size_t pad = (k - 1) / 2;
  Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(C));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t src = t + j;
      if (src < pad || src - pad >= T) continue;
      for (std::size_t c = 0; c < C; ++c) {
        dH(static_cast<Eigen::Index>(src - pad), static_cast<Eigen::Index>(c)) +=
            dpatches(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c * k + j));
      }
    }
  }

  for (std::size_t l = cache.layers.size(); l-- > 0;) {
    const LayerCache& lc = cache.layers[l];
    const std::size_t h = lc.fwd.h.dim(1);
    const auto hi = static_cast<Eigen::Index>(h);
    Tensor dH_fwd({T, h});
    Tensor dH_bwd({T, h});
    dH_fwd.matrix() = dH.leftCols(hi);
    dH_bwd.matrix() = dH.rightCols(hi);
    Eigen::MatrixXd dX = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T),
                                               static_cast<Eigen::Index>(lc.input.dim(1)));
    for (Direction d : {Direction::Forward, Direction::Backward}) {
      const bool rev = d == Direction::Backward;
      detail::lstm_direction_backward(lc.input, rev ? lc.bwd : lc.fwd, rev ? dH_bwd : dH_fwd,
                                      params.lstm(l, d, 0), params.lstm(l, d, 1), rev,
                                      grads.lstm(l, d, 0), grads.lstm(l, d, 1), grads.lstm(l, d, 2), dX);
    }
    dH = std::move(dX);
  }

  Tensor& dE = grads.embedding();
  for (std::size_t t = 0; t < cache.ids.size(); ++t) {
    const std::size_t id = cache.ids[t];
    if (id == kPadId) continue;
    auto row = dE.row(id);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += dH(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
  }
}

/// Fresh gradient for a single example.
inline ModelParams model_backward(const ForwardCache& cache, EmotionClass gold, const ModelParams& params) {
  ModelParams grads = ModelParams::zeros_like(params);
  model_backward(cache, gold, params, grads);
  return grads;
}

}  // namespace emoquad

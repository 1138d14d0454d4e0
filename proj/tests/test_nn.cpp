#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "emoquad/nn.hpp"
#include "test_support.hpp"

namespace emoquad {
namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

double scalar_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---- LSTM cell ----

TEST(LstmCell, ZeroWeightsZeroState) {
  const Tensor W({8, 3}), U({8, 2}), b({8});
  const std::vector<double> x = {0.3, -1.0, 2.0};
  const auto s = lstm_cell_step(x, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), W, U, b);
  EXPECT_EQ(s.h, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(s.c, Eigen::VectorXd::Zero(2));
}

TEST(LstmCell, ZeroWeightsCarryHalfTheCell) {
  const Tensor W({8, 3}), U({8, 2}), b({8});
  const std::vector<double> x = {0.3, -1.0, 2.0};
  Eigen::VectorXd c_prev(2);
  c_prev << 1.2, -3.0;
  const auto s = lstm_cell_step(x, Eigen::VectorXd::Zero(2), c_prev, W, U, b);
  for (int k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(s.c[k], 0.5 * c_prev[k]);
    EXPECT_DOUBLE_EQ(s.h[k], 0.5 * std::tanh(0.5 * c_prev[k]));
  }
}

TEST(LstmCell, MatchesScalarOracle) {
  Rng rng(12);
  const std::size_t in = 3, h = 4;
  const Tensor W = random_tensor({4 * h, in}, rng), U = random_tensor({4 * h, h}, rng), b = random_tensor({4 * h}, rng);
  std::vector<double> x(in);
  for (double& v : x) v = rng.uniform(-1, 1);
  Eigen::VectorXd hp(h), cp(h);
  for (std::size_t k = 0; k < h; ++k) {
    hp[k] = rng.uniform(-1, 1);
    cp[k] = rng.uniform(-1, 1);
  }
  const auto s = lstm_cell_step(x, hp, cp, W, U, b);

  auto pre = [&](std::size_t gate, std::size_t k) {
    const std::size_t r = gate * h + k;
    double a = b[r];
    for (std::size_t j = 0; j < in; ++j) a += W.at(r, j) * x[j];
    for (std::size_t j = 0; j < h; ++j) a += U.at(r, j) * hp[j];
    return a;
  };
  for (std::size_t k = 0; k < h; ++k) {
    const double i = scalar_sigmoid(pre(0, k));
    const double f = scalar_sigmoid(pre(1, k));
    const double g = std::tanh(pre(2, k));
    const double o = scalar_sigmoid(pre(3, k));
    const double c = f * cp[k] + i * g;
    EXPECT_NEAR(s.c[k], c, 1e-14);
    EXPECT_NEAR(s.h[k], o * std::tanh(c), 1e-14);
  }
}

TEST(LstmCell, ShapeMismatchIsStructural) {
  const Tensor W({8, 3}), U({8, 2}), b({8});
  const std::vector<double> x = {1.0, 2.0};
  EXPECT_THROW(lstm_cell_step(x, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), W, U, b), StructuralError);
}

// ---- BiLSTM ----

ModelConfig one_layer(std::size_t d, std::size_t h, std::size_t T) {
  ModelConfig c = testing::small_config();
  c.embed_dim = d;
  c.lstm_hidden = h;
  c.lstm_layers = 1;
  c.max_len = T;
  return c;
}

TEST(BiLstm, ZeroWeightsGiveZeroOutput) {
  const ModelConfig c = one_layer(5, 3, 4);
  const ModelParams p(c);
  Rng rng(1);
  const Tensor X = random_tensor({4, 5}, rng);
  const Tensor H = bilstm_forward(X, p);
  ASSERT_EQ(H.shape(), (std::vector<std::size_t>{4, 6}));
  for (double v : H.values()) EXPECT_EQ(v, 0.0);
}

TEST(BiLstm, ReversalSymmetry) {
  const ModelConfig c = one_layer(3, 2, 3);
  Rng rng(21);
  ModelParams p = init_params(c, rng);
  testing::randomize(p, rng);
  const Tensor X = random_tensor({3, 3}, rng);
  const Tensor H = bilstm_forward(X, p);

  ModelParams swapped = p;
  for (std::size_t which = 0; which < 3; ++which) {
    std::swap(swapped.lstm(0, Direction::Forward, which), swapped.lstm(0, Direction::Backward, which));
  }
  Tensor Xr({3, 3});
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 3; ++j) Xr.at(t, j) = X.at(2 - t, j);
  }
  const Tensor Hr = bilstm_forward(Xr, swapped);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_NEAR(Hr.at(t, k), H.at(2 - t, 2 + k), 1e-15);
      EXPECT_NEAR(Hr.at(t, 2 + k), H.at(2 - t, k), 1e-15);
    }
  }
}

TEST(BiLstm, ForwardHalfMatchesRepeatedCellSteps) {
  const ModelConfig c = one_layer(3, 2, 4);
  Rng rng(22);
  ModelParams p = init_params(c, rng);
  testing::randomize(p, rng);
  const Tensor X = random_tensor({4, 3}, rng);
  const Tensor H = bilstm_forward(X, p);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(2), cell = Eigen::VectorXd::Zero(2);
  for (std::size_t t = 0; t < 4; ++t) {
    auto s = lstm_cell_step(X.row(t), h, cell, p.lstm(0, Direction::Forward, 0), p.lstm(0, Direction::Forward, 1),
                            p.lstm(0, Direction::Forward, 2));
    h = s.h;
    cell = s.c;
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(H.at(t, k), h[k], 1e-15);
  }
}

// ---- convolution ----

TEST(Conv1d, ZeroKernelPassesPositiveBias) {
  Rng rng(3);
  const Tensor H = random_tensor({5, 2}, rng);
  const Tensor K({3, 2, 3});
  const Tensor bias({3}, 0.7);
  const auto r = conv1d_forward(H, K, bias);
  for (double v : r.out.values()) EXPECT_EQ(v, 0.7);
}

TEST(Conv1d, WidthOneCopiesChannelZeroThroughRelu) {
  Rng rng(4);
  const Tensor H = random_tensor({6, 3}, rng);
  Tensor K({1, 3, 1});
  K[0] = 1.0;
  const auto r = conv1d_forward(H, K, Tensor({1}));
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(r.out.at(t, 0), std::max(0.0, H.at(t, 0)));
}

TEST(Conv1d, MatchesTripleLoopOracle) {
  Rng rng(5);
  const Tensor H = random_tensor({5, 2}, rng);
  const Tensor K = random_tensor({3, 2, 3}, rng);
  const Tensor bias = random_tensor({3}, rng);
  const auto r = conv1d_forward(H, K, bias);
  for (int t = 0; t < 5; ++t) {
    for (int f = 0; f < 3; ++f) {
      double acc = bias[f];
      for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < 3; ++j) {
          const int src = t + j - 1;
          if (src < 0 || src >= 5) continue;
          acc += K[(f * 2 + c) * 3 + j] * H.at(src, c);
        }
      }
      EXPECT_NEAR(r.out.at(t, f), std::max(0.0, acc), 1e-14);
    }
  }
}

TEST(Conv1d, RejectsEvenKernelAndBadShapes) {
  EXPECT_THROW(conv1d_forward(Tensor({4, 2}), Tensor({1, 2, 2}), Tensor({1})), StructuralError);
  EXPECT_THROW(conv1d_forward(Tensor({4, 2}), Tensor({1, 3, 3}), Tensor({1})), StructuralError);
  EXPECT_THROW(conv1d_forward(Tensor({4, 2}), Tensor({1, 2, 3}), Tensor({2})), StructuralError);
}

// ---- pooling ----

TEST(MaxPool, ColumnMaxima) {
  const auto r = global_max_pool(Tensor({3, 2}, {1, 5, 3, 2, 0, 4}));
  EXPECT_EQ(r.pooled.values(), (std::vector<double>{3, 5}));
  EXPECT_EQ(r.argmax, (std::vector<std::size_t>{1, 0}));
}

TEST(MaxPool, TiesGoToTheFirstStep) {
  const auto r = global_max_pool(Tensor({4, 2}, 2.5));
  EXPECT_EQ(r.pooled.values(), (std::vector<double>{2.5, 2.5}));
  EXPECT_EQ(r.argmax, (std::vector<std::size_t>{0, 0}));
}

TEST(MaxPool, SingleStepIsIdentity) {
  const auto r = global_max_pool(Tensor({1, 3}, {-1, 0, 7}));
  EXPECT_EQ(r.pooled.values(), (std::vector<double>{-1, 0, 7}));
}

// ---- softmax / dense ----

TEST(Softmax, Examples) {
  const std::vector<double> zero = {0, 0, 0, 0};
  for (double p : softmax(zero)) EXPECT_EQ(p, 0.25);
  const std::vector<double> big = {1000, 0, 0, 0};
  const auto p = softmax(big);
  EXPECT_EQ(p[0], 1.0);
  for (int k = 1; k < 4; ++k) {
    EXPECT_GE(p[k], 0.0);
    EXPECT_LT(p[k], 1e-300);
  }
}

TEST(Softmax, RandomLogitsSumToOneAndKeepArgmax) {
  Rng rng(6);
  for (int trial = 0; trial < 10000; ++trial) {
    const double scale = trial % 2 == 0 ? 1e3 : 10.0;
    std::vector<double> z(4);
    for (double& v : z) v = rng.uniform(-scale, scale);
    const auto p = softmax(z);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const auto zmax = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    EXPECT_EQ(index_of(argmax_class(p)), zmax);

    // Shift invariance and positive scaling.
    std::vector<double> shifted = z, scaled = z;
    const double shift = rng.uniform(-50, 50);
    for (double& v : shifted) v += shift;
    for (double& v : scaled) v *= 0.5;
    const auto ps = softmax(shifted);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(ps[k], p[k], 1e-12);
    EXPECT_EQ(argmax_class(softmax(scaled)), argmax_class(p));
  }
}

TEST(Softmax, ModerateLogitsStayInsideTheOpenInterval) {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> z(4);
    for (double& v : z) v = rng.uniform(-20, 20);
    for (double v : softmax(z)) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(ArgmaxClass, LowestIndexWinsTies) {
  EXPECT_EQ(argmax_class({0.25, 0.25, 0.25, 0.25}), EmotionClass::HappyActive);
  EXPECT_EQ(argmax_class({0.1, 0.4, 0.4, 0.1}), EmotionClass::HappyInactive);
}

TEST(Dense, LogitsAreAffine) {
  const Tensor in({2}, {1.0, -2.0});
  const Tensor D({4, 2}, {1, 0, 0, 1, 1, 1, 0, 0});
  const Tensor b({4}, {0, 0, 0, 0.5});
  const auto r = dense_softmax(in, D, b);
  EXPECT_EQ(r.logits.values(), (std::vector<double>{1, -2, -1, 0.5}));
}

// ---- whole model ----

TEST(Model, DefaultShapes) {
  ModelConfig c;
  c.vocab_size = 120;
  Rng rng(8);
  const ModelParams p = init_params(c, rng);
  std::vector<std::size_t> ids(30, 0);
  for (std::size_t t = 0; t < 12; ++t) ids[t] = 2 + t;
  const auto r = model_forward(ids, p, c, Mode::Eval);
  const auto& fc = r.cache;
  using Shape = std::vector<std::size_t>;
  EXPECT_EQ(fc.embedded.shape(), (Shape{30, 200}));
  ASSERT_EQ(fc.layers.size(), 2u);
  EXPECT_EQ(fc.layers[0].output.shape(), (Shape{30, 128}));
  EXPECT_EQ(fc.layers[1].output.shape(), (Shape{30, 128}));
  EXPECT_EQ(fc.conv.out.shape(), (Shape{30, 64}));
  EXPECT_EQ(fc.pool.pooled.shape(), (Shape{64}));
  EXPECT_EQ(fc.dense.logits.shape(), (Shape{4}));
  double sum = 0.0;
  for (double v : r.probs) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Model, InitialisationFacts) {
  const ModelConfig c = testing::small_config();
  Rng rng(9);
  const ModelParams p = init_params(c, rng);
  for (double v : p.embedding().row(kPadId)) EXPECT_EQ(v, 0.0);
  for (std::size_t l = 0; l < c.lstm_layers; ++l) {
    for (Direction d : {Direction::Forward, Direction::Backward}) {
      const Tensor& b = p.lstm(l, d, 2);
      for (std::size_t k = 0; k < 4 * c.lstm_hidden; ++k) {
        const bool forget = k >= c.lstm_hidden && k < 2 * c.lstm_hidden;
        EXPECT_EQ(b[k], forget ? 1.0 : 0.0);
      }
      const Tensor& W = p.lstm(l, d, 0);
      const double limit = std::sqrt(6.0 / static_cast<double>(W.dim(0) + W.dim(1)));
      for (double v : W.values()) EXPECT_LE(std::abs(v), limit);
    }
  }
  EXPECT_NO_THROW(p.check_shapes(c));
}

TEST(Model, AllPadEvalOutputIsPinned) {
  const ModelConfig c = testing::small_config();
  Rng rng(42);
  ModelParams p = init_params(c, rng);
  // Fresh init maps an all-zero input to uniform probabilities, so perturb
  // every weight to make the pin informative.
  testing::randomize(p, rng);
  const std::vector<std::size_t> ids(c.max_len, kPadId);
  const auto r = model_forward(ids, p, c, Mode::Eval);
  const Probabilities pinned = {0.022761462059031977, 0.4851176003832785, 0.041593796865950931,
                                0.45052714069173871};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.probs[k], pinned[k], 1e-15) << k;
  // Depends only on the parameters.
  Rng other(1);
  const auto again = model_forward(ids, p, c, Mode::Eval, &other);
  EXPECT_EQ(again.probs, r.probs);
}

TEST(Model, EvalModeIsBitwiseDeterministic) {
  const ModelConfig c = testing::small_config();
  Rng rng(10);
  const ModelParams p = init_params(c, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ids = testing::random_ids(c, rng);
    const auto a = model_forward(ids, p, c, Mode::Eval);
    const ModelParams copy = p;
    const auto b = model_forward(ids, copy, c, Mode::Eval);
    EXPECT_EQ(a.probs, b.probs);
  }
}

TEST(Model, NoNonFiniteValuesWithLargeWeights) {
  const ModelConfig c = testing::small_config();
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    ModelParams p = init_params(c, rng);
    testing::randomize(p, rng);
    const auto ids = testing::random_ids(c, rng);
    const auto scale = draw_dropout_scale(c.conv_filters, c.dropout_rate, rng);
    const auto fr = model_forward(ids, p, c, scale);
    const auto& fc = fr.cache;
    EXPECT_TRUE(fc.embedded.all_finite());
    for (const auto& l : fc.layers) EXPECT_TRUE(l.output.all_finite());
    EXPECT_TRUE(fc.conv.out.all_finite());
    EXPECT_TRUE(fc.dense.logits.all_finite());
    double sum = 0.0;
    for (double v : fr.probs) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_TRUE(model_backward(fc, class_at(rng.below(4)), p).all_finite());
  }
}

TEST(Model, Preconditions) {
  const ModelConfig c = testing::small_config();
  Rng rng(12);
  const ModelParams p = init_params(c, rng);
  std::vector<std::size_t> ids(c.max_len, 0);
  ids[0] = c.vocab_size;
  EXPECT_THROW(model_forward(ids, p, c, Mode::Eval), StructuralError);
  EXPECT_THROW(model_forward(std::vector<std::size_t>(3, 0), p, c, Mode::Eval), StructuralError);
  EXPECT_THROW(model_forward(std::vector<std::size_t>(c.max_len, 0), p, c, Mode::Train), StructuralError);
}

TEST(Model, DropoutScaleIsInverted) {
  Rng rng(13);
  const auto s = draw_dropout_scale(10000, 0.5, rng);
  std::size_t kept = 0;
  for (double v : s) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    kept += v == 2.0;
  }
  EXPECT_GT(kept, 4800u);
  EXPECT_LT(kept, 5200u);
  for (double v : draw_dropout_scale(5, 0.0, rng)) EXPECT_EQ(v, 1.0);
}

}  // namespace
}  // namespace emoquad

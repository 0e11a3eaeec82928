#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "eegbench/nn/graph.hpp"
#include "eegbench/nn/init.hpp"
#include "eegbench/nn/ops.hpp"
#include "eegbench/nn/optimizer.hpp"
#include "support/gradcheck.hpp"

namespace {

using eegbench::ContractError;
using eegbench::DataError;
using eegbench::DimensionError;
using eegbench::ParameterError;
using eegbench::Rng;
using eegbench::nn::Activation;
using eegbench::nn::Graph;
using eegbench::nn::Mode;
using eegbench::nn::Parameter;
using eegbench::nn::Tensor;
using eegbench::nn::Var;
namespace nn = eegbench::nn;
using eegbench::testing::random_tensor;

TEST(Conv1d, DifferenceKernel) {
  Tensor x({4, 1}, {1, 2, 3, 4});
  Tensor k({1, 3, 1}, {1, 0, -1});
  Tensor y = nn::conv1d(x, k, Tensor::vector({0}));
  EXPECT_EQ(y.shape(), (nn::Shape{2, 1}));
  EXPECT_DOUBLE_EQ(y[0], -2);
  EXPECT_DOUBLE_EQ(y[1], -2);
}

TEST(Conv1d, ZeroKernelsGiveBias) {
  Rng rng(1);
  Tensor x = random_tensor({10, 2}, rng);
  Tensor y = nn::conv1d(x, Tensor({1, 3, 2}), Tensor::vector({5}));
  ASSERT_EQ(y.shape(), (nn::Shape{8, 1}));
  for (double v : y.values()) EXPECT_EQ(v, 5.0);
}

TEST(Conv1d, FrameShape) {
  Rng rng(2);
  Tensor x = random_tensor({6250, 19}, rng);
  Tensor k = random_tensor({64, 3, 19}, rng, 0.1);
  Tensor y = nn::conv1d(x, k, Tensor({64}));
  EXPECT_EQ(y.shape(), (nn::Shape{(6250 - 3) / 1 + 1, 64}));
}

TEST(Conv1d, MatchesDefinitionWithStride) {
  Rng rng(3);
  Tensor x = random_tensor({11, 3}, rng);
  Tensor k = random_tensor({2, 4, 3}, rng);
  Tensor b = random_tensor({2}, rng);
  Tensor y = nn::conv1d(x, k, b, 3);
  ASSERT_EQ(y.shape(), (nn::Shape{3, 2}));
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t o = 0; o < 2; ++o) {
      double s = b[o];
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t c = 0; c < 3; ++c) s += x.at(t * 3 + j, c) * k.at(o, j, c);
      EXPECT_NEAR(y.at(t, o), s, 1e-12);
    }
}

TEST(Conv1d, ErrorsNameTheAxis) {
  Tensor x({4, 2});
  try {
    nn::conv1d(x, Tensor({1, 3, 3}), Tensor({1}));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos);
  }
  try {
    nn::conv1d(Tensor({2, 2}), Tensor({1, 3, 2}), Tensor({1}));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("time"), std::string::npos);
  }
}

TEST(Conv1d, LinearInInput) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = random_tensor({50, 4}, rng), b = random_tensor({50, 4}, rng);
    Tensor k = random_tensor({5, 3, 4}, rng);
    const double alpha = rng.normal(), beta = rng.normal();
    Tensor mix(a.shape());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * a[i] + beta * b[i];
    Tensor zero({5});
    Tensor lhs = nn::conv1d(mix, k, zero);
    Tensor ca = nn::conv1d(a, k, zero), cb = nn::conv1d(b, k, zero);
    for (std::size_t i = 0; i < lhs.size(); ++i)
      EXPECT_NEAR(lhs[i], alpha * ca[i] + beta * cb[i], 1e-10);
  }
}

TEST(MaxPool1d, Examples) {
  Tensor y = nn::maxpool1d(Tensor({3, 1}, {1, 3, 2}), 2, 1);
  EXPECT_EQ(y, Tensor({2, 1}, {3, 3}));
  Tensor c = nn::maxpool1d(Tensor({5, 2}, 4.5), 2, 1);
  EXPECT_EQ(c, Tensor({4, 2}, 4.5));
  EXPECT_EQ(nn::maxpool1d(Tensor({6248, 3}), 2, 1).dim(0), 6247u);
  EXPECT_THROW(nn::maxpool1d(Tensor({1, 1}), 2, 1), DimensionError);
}

TEST(MaxPool1d, TiesRouteGradientToFirstOccurrence) {
  Graph g;
  Parameter x{"x", Tensor({3, 1}, {2, 2, 1}), {}, true};  // windows {2,2} and {2,1}
  Var y = nn::maxpool1d(g.param(x), 2, 1);
  auto grads = nn::backprop(nn::weighted_sum(y, Tensor({2, 1}, {1, 1})));
  EXPECT_EQ(grads["x"], Tensor({3, 1}, {1, 1, 0}));
}

TEST(Dense, Examples) {
  Tensor eye = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  Tensor x = Tensor::vector({0.5, -2, 3});
  EXPECT_EQ(nn::dense(x, eye, Tensor({3})), x);
  EXPECT_EQ(nn::dense(Tensor::vector({2, 3}), Tensor::matrix({{1, 1}}), Tensor::vector({1})),
            Tensor::vector({6}));
  EXPECT_THROW(nn::dense(Tensor({3}), Tensor({2, 4}), Tensor({2})), DimensionError);
}

TEST(Dense, OnPooledFeaturesOfReducedFrame) {
  // CNN-1 on a 500 x 19 frame: 500 -> 498 -> 496 -> pool 495, x 64 filters.
  const std::size_t features = (500 - 2 - 2 - 1) * 64;
  Rng rng(5);
  Tensor w = random_tensor({100, features}, rng, 0.01);
  Tensor y = nn::dense(random_tensor({features}, rng), w, Tensor({100}));
  EXPECT_EQ(y.shape(), (nn::Shape{100}));
}

TEST(Activation, Definitions) {
  EXPECT_EQ(nn::activation(Tensor::vector({-1, 0, 2}), Activation::relu), Tensor::vector({0, 0, 2}));
  EXPECT_DOUBLE_EQ(nn::activation(Tensor::vector({0}), Activation::sigmoid)[0], 0.5);
  EXPECT_EQ(nn::activation(Tensor::vector({0}), Activation::selu)[0], 0.0);
  const double left = nn::activation(Tensor::vector({-1e-9}), Activation::selu)[0];
  const double right = nn::activation(Tensor::vector({1e-9}), Activation::selu)[0];
  EXPECT_NEAR(left, 0.0, 1e-8);
  EXPECT_NEAR(right, 0.0, 1e-8);
  EXPECT_DOUBLE_EQ(nn::activation(Tensor::vector({-2}), Activation::leaky_relu)[0], -0.02);
  EXPECT_NEAR(nn::activation(Tensor::vector({-1}), Activation::selu)[0],
              1.0507009873554805 * 1.6732632423543772 * (std::exp(-1.0) - 1.0), 1e-15);
}

TEST(Dropout, IdentityCases) {
  Rng rng(6);
  Tensor x = random_tensor({100}, rng);
  EXPECT_EQ(nn::dropout(x, 0.0, Mode::train, rng), x);
  EXPECT_EQ(nn::dropout(x, 0.5, Mode::eval, rng), x);
  EXPECT_THROW(nn::dropout(x, 1.0, Mode::train, rng), ParameterError);
  EXPECT_THROW(nn::dropout(x, -0.1, Mode::eval, rng), ParameterError);
}

TEST(Dropout, InvertedScalingPreservesMean) {
  Rng rng(7);
  Tensor ones({1'000'000}, 1.0);
  Tensor y = nn::dropout(ones, 0.5, Mode::train, rng);
  std::size_t zeros = 0;
  for (double v : y.values()) {
    ASSERT_TRUE(v == 0.0 || v == 2.0);
    zeros += v == 0.0;
  }
  const double mean = y.sum() / static_cast<double>(y.size());
  EXPECT_GE(mean, 0.99);
  EXPECT_LE(mean, 1.01);
  EXPECT_NEAR(static_cast<double>(zeros) / 1e6, 0.5, 0.005);
}

TEST(Dropout, RowSeededMaskIgnoresBatchCompanions) {
  Rng rng(8);
  const Tensor x = random_tensor({4, 6, 3}, rng);
  const std::vector<std::uint64_t> seeds = {11, 12, 13, 14};
  nn::Graph g(false);
  const Tensor all = nn::dropout(g.constant(x), 0.5, Mode::train, seeds, 2).value();
  for (std::size_t b = 0; b < 4; ++b) {
    Tensor row({1, 6, 3});
    std::copy_n(x.data() + b * 18, 18, row.data());
    const std::uint64_t seed[] = {seeds[b]};
    const Tensor one = nn::dropout(g.constant(row), 0.5, Mode::train, seed, 2).value();
    for (std::size_t i = 0; i < 18; ++i) EXPECT_EQ(one[i], all[b * 18 + i]);
  }
  const Tensor other = nn::dropout(g.constant(x), 0.5, Mode::train, seeds, 3).value();
  EXPECT_NE(other, all);
  EXPECT_THROW(nn::dropout(g.constant(x), 0.5, Mode::train, std::span(seeds).first(3), 2), DimensionError);
}

// Naive per-timestep LSTM written directly from the gate equations.
std::vector<std::vector<double>> lstm_oracle(const Tensor& seq, const nn::LstmParams& p) {
  const std::size_t T = seq.dim(0), F = seq.dim(1), H = p.units;
  std::vector<double> h(H, 0.0), c(H, 0.0);
  std::vector<std::vector<double>> out;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> a(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = p.biases[r];
      for (std::size_t f = 0; f < F; ++f) s += p.input_weights.at(r, f) * seq.at(t, f);
      for (std::size_t u = 0; u < H; ++u) s += p.recurrent_weights.at(r, u) * h[u];
      a[r] = s;
    }
    for (std::size_t u = 0; u < H; ++u) {
      const double i = sig(a[u]), f = sig(a[H + u]), g = std::tanh(a[2 * H + u]),
                   o = sig(a[3 * H + u]);
      c[u] = f * c[u] + i * g;
      h[u] = o * std::tanh(c[u]);
    }
    out.push_back(h);
  }
  return out;
}

nn::LstmParams random_lstm(std::size_t feat, std::size_t units, Rng& rng) {
  return {units, random_tensor({4 * units, feat}, rng, 0.6),
          random_tensor({4 * units, units}, rng, 0.6), random_tensor({4 * units}, rng, 0.3)};
}

TEST(Lstm, ZeroWeightsGiveZeroStates) {
  nn::LstmParams p{5, Tensor({20, 3}), Tensor({20, 5}), Tensor({20})};
  Rng rng(8);
  Tensor h = nn::lstm_forward(random_tensor({7, 3}, rng), p, true);
  for (double v : h.values()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, SingleStepIsOneCell) {
  Rng rng(9);
  auto p = random_lstm(4, 3, rng);
  Tensor x = random_tensor({1, 4}, rng);
  Tensor h = nn::lstm_forward(x, p, false);
  auto expect = lstm_oracle(x, p);
  for (std::size_t u = 0; u < 3; ++u) EXPECT_NEAR(h[u], expect[0][u], 1e-12);
}

TEST(Lstm, MatchesScalarLoopOracle) {
  Rng rng(10);
  auto p = random_lstm(4, 3, rng);
  Tensor x = random_tensor({8, 4}, rng);
  Tensor seq = nn::lstm_forward(x, p, true);
  Tensor last = nn::lstm_forward(x, p, false);
  auto expect = lstm_oracle(x, p);
  ASSERT_EQ(seq.shape(), (nn::Shape{8, 3}));
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t u = 0; u < 3; ++u) EXPECT_NEAR(seq.at(t, u), expect[t][u], 1e-12);
  for (std::size_t u = 0; u < 3; ++u) EXPECT_NEAR(last[u], expect[7][u], 1e-12);
}

TEST(Lstm, BatchRowsAreIndependent) {
  Rng rng(11);
  auto p = random_lstm(2, 4, rng);
  Tensor batch = random_tensor({3, 6, 2}, rng);
  Tensor out = nn::lstm_forward(batch, p, false);
  for (std::size_t n = 0; n < 3; ++n) {
    Tensor one({6, 2}, std::vector<double>(batch.data() + n * 12, batch.data() + (n + 1) * 12));
    Tensor h = nn::lstm_forward(one, p, false);
    for (std::size_t u = 0; u < 4; ++u) EXPECT_NEAR(out.at(n, u), h[u], 1e-14);
  }
}

TEST(Lstm, EmptySequenceRejected) {
  Rng rng(12);
  auto p = random_lstm(2, 2, rng);
  EXPECT_THROW(nn::lstm_forward(Tensor({0, 2}), p, false), ParameterError);
}

TEST(BceLoss, Examples) {
  EXPECT_LE(nn::bce_loss(Tensor::vector({1}), Tensor::vector({1})), 1e-6);
  EXPECT_NEAR(nn::bce_loss(Tensor::vector({0.5}), Tensor::vector({1})), std::numbers::ln2, 1e-15);
  std::vector<Tensor> w{Tensor::matrix({{1, 2}})};
  EXPECT_NEAR(nn::bce_loss(Tensor::vector({1}), Tensor::vector({1}), w, 0.01), 0.05, 1e-6);
  EXPECT_THROW(nn::bce_loss(Tensor::vector({0.3}), Tensor::vector({0.5})), DataError);
}

TEST(Backprop, SigmoidBceClosedForm) {
  Graph g;
  Parameter w{"w", Tensor::matrix({{0.0}}), {}, true};
  Var z = nn::dense(g.constant(Tensor::vector({1.0})), g.param(w),
                    g.constant(Tensor::vector({0.0})));
  Var loss = nn::bce_loss(nn::activation(z, Activation::sigmoid), Tensor::vector({1}));
  auto grads = nn::backprop(loss);
  EXPECT_NEAR(grads.at("w")[0], -0.5, 1e-12);
  EXPECT_EQ(g.loss_grad()[0], 1.0);
}

TEST(Backprop, ConstantGraphHasZeroGradients) {
  Graph g;
  Parameter unused{"unused", Tensor({2, 2}, 3.0), {}, true};
  g.param(unused);
  Var c = g.constant(Tensor::vector({0.25}));
  Var loss = nn::bce_loss(c, Tensor::vector({1}));
  auto grads = nn::backprop(loss);
  EXPECT_EQ(grads.at("unused"), Tensor({2, 2}));
}

TEST(Backprop, NonScalarLossRejected) {
  Graph g;
  Parameter w{"w", Tensor::vector({1, 2}), {}, true};
  EXPECT_THROW(nn::backprop(nn::activation(g.param(w), Activation::relu)), ContractError);
}

TEST(Gradients, FiniteDifferenceEveryLayerKind) {
  for (const auto& c : eegbench::testing::layer_grad_cases()) {
    auto r = eegbench::testing::check_gradients(c, 20, 1234);
    EXPECT_LT(r.worst_relative_error, 1e-4) << c.name;
    EXPECT_GT(r.coordinates_checked, 0u) << c.name;
  }
}

TEST(Optimizer, SgdStep) {
  nn::OptimizerState s{.kind = nn::OptimizerKind::sgd, .learning_rate = 0.01};
  Tensor p = Tensor::vector({1.0});
  Tensor g = Tensor::vector({1.0});
  std::vector<Tensor*> ps{&p};
  std::vector<const Tensor*> gs{&g};
  nn::optimizer_step(s, ps, gs);
  EXPECT_DOUBLE_EQ(p[0], 0.99);
}

TEST(Optimizer, ZeroGradientLeavesParametersButCountsStep) {
  nn::OptimizerState s{.kind = nn::OptimizerKind::adam, .learning_rate = 0.01};
  Tensor p = Tensor::vector({1.0, -2.0});
  Tensor g({2});
  std::vector<Tensor*> ps{&p};
  std::vector<const Tensor*> gs{&g};
  nn::optimizer_step(s, ps, gs);
  nn::optimizer_step(s, ps, gs);
  EXPECT_EQ(p, Tensor::vector({1.0, -2.0}));
  EXPECT_EQ(s.step_count, 2u);
}

TEST(Optimizer, AdamFirstStepIsScaleFree) {
  // First step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  for (double scale : {1e-3, 1.0, 1e3}) {
    nn::OptimizerState s{.kind = nn::OptimizerKind::adam, .learning_rate = 0.01};
    Tensor p({3}, 0.0);
    Tensor g({3}, scale);
    std::vector<Tensor*> ps{&p};
    std::vector<const Tensor*> gs{&g};
    nn::optimizer_step(s, ps, gs);
    for (double v : p.values()) EXPECT_NEAR(std::abs(v), 0.01, 1e-6) << scale;
  }
}

TEST(Optimizer, MisalignedListsRejected) {
  nn::OptimizerState s;
  Tensor p({2}), g({3});
  std::vector<Tensor*> ps{&p};
  std::vector<const Tensor*> gs{};
  EXPECT_THROW(nn::optimizer_step(s, ps, gs), ContractError);
  std::vector<const Tensor*> gs2{&g};
  EXPECT_THROW(nn::optimizer_step(s, ps, gs2), ContractError);
}

TEST(Init, GlorotBounds) {
  Rng rng(13);
  Tensor w({64, 57});
  nn::glorot_uniform(w, 57, 64, rng);
  const double limit = std::sqrt(6.0 / (57 + 64));
  for (double v : w.values()) {
    EXPECT_LE(std::abs(v), limit);
  }
  EXPECT_NEAR(w.sum() / static_cast<double>(w.size()), 0.0, 0.02);
}

}  // namespace

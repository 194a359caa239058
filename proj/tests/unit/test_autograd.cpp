#include <gtest/gtest.h>

#include <cmath>

#include "dpct/autograd/ops.hpp"
#include "grad_check.hpp"

using namespace dpct;
using namespace dpct::ag;
using dpct::testing::random_leaf;
using dpct::testing::worst_fd_error;

namespace {

// Reduces any tensor to a scalar with a fixed random projection so every output
// element receives a distinct upstream gradient.
Var project(const Var& y, std::uint64_t seed = 99) {
  return sum(mul(y, Var::constant(y.shape(), dpct::testing::random_values(y.numel(), seed))));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST(Autograd, ElementwiseOps) {
  Var a = random_leaf({2, 3, 4}, 1), b = random_leaf({2, 3, 4}, 2);
  EXPECT_LT(worst_fd_error([&] { return project(add(a, b)); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(sub(a, b)); }, b, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(mul(a, b)); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(scale(a, -2.5)); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(silu(a)); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(softplus(a)); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(neg_exp(a)); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return mean(a); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return mse(a, b); }, a, 24, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return charbonnier(a, b, 1e-3); }, b, 24, 1), kTol);
}

TEST(Autograd, ReluAwayFromKink) {
  Var a = random_leaf({1, 4, 4}, 3);
  for (double& v : a.mutable_value())
    if (std::abs(v) < 0.05) v = 0.5;
  EXPECT_LT(worst_fd_error([&] { return project(relu(a)); }, a, 16, 1), kTol);
}

TEST(Autograd, ChannelOps) {
  Var x = random_leaf({3, 4, 5}, 4), s = random_leaf({3}, 5);
  EXPECT_LT(worst_fd_error([&] { return project(mul_channel(x, s)); }, x, 60, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(mul_channel(x, s)); }, s, 3, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(add_channel(x, s)); }, s, 3, 1), kTol);
  Var y = random_leaf({2, 4, 5}, 6);
  EXPECT_LT(worst_fd_error([&] { return project(concat_channels({x, y})); }, y, 40, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(slice_channels(x, 1, 2)); }, x, 60, 1), kTol);
}

TEST(Autograd, Convolutions) {
  Var x = random_leaf({3, 6, 7}, 7), w = random_leaf({4, 3, 3, 3}, 8), b = random_leaf({4}, 9);
  EXPECT_LT(worst_fd_error([&] { return project(conv2d(x, w, b, 1)); }, x, 40, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(conv2d(x, w, b, 1)); }, w, 40, 2), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(conv2d(x, w, b, 1)); }, b, 4, 3), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(conv2d(x, w, b, 0)); }, w, 40, 4), kTol);
  Var w1 = random_leaf({5, 3, 1, 1}, 10);
  EXPECT_LT(worst_fd_error([&] { return project(conv2d(x, w1, Var(), 0)); }, x, 40, 5), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(conv2d(x, w1, Var(), 0)); }, w1, 15, 6), kTol);
  Var dw = random_leaf({3, 1, 5, 5}, 11), db = random_leaf({3}, 12);
  EXPECT_LT(worst_fd_error([&] { return project(depthwise_conv2d(x, dw, db, 2)); }, x, 40, 7), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(depthwise_conv2d(x, dw, db, 2)); }, dw, 40, 8), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(depthwise_conv2d(x, dw, db, 2)); }, db, 3, 9), kTol);
}

TEST(Autograd, ConvolutionMatchesDirectSum) {
  Var x = random_leaf({2, 5, 4}, 13), w = random_leaf({3, 2, 3, 3}, 14), b = random_leaf({3}, 15);
  const Var y = conv2d(x, w, b, 1);
  for (int o = 0; o < 3; ++o)
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 4; ++c) {
        double acc = b.value()[o];
        for (int i = 0; i < 2; ++i)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int rr = r + dy, cc = c + dx;
              if (rr < 0 || cc < 0 || rr >= 5 || cc >= 4) continue;
              acc += x.value()[(i * 5 + rr) * 4 + cc] * w.value()[((o * 2 + i) * 3 + dy + 1) * 3 + dx + 1];
            }
        EXPECT_NEAR(y.value()[(o * 5 + r) * 4 + c], acc, 1e-12);
      }
}

TEST(Autograd, MaxPoolAndLayerNorm) {
  Var x = random_leaf({2, 6, 5}, 16);
  const Var p = maxpool2(x);
  EXPECT_EQ(p.shape(), (std::vector<int>{2, 3, 2}));
  EXPECT_LT(worst_fd_error([&] { return project(maxpool2(x)); }, x, 60, 1), kTol);
  Var g = random_leaf({2}, 17), be = random_leaf({2}, 18);
  Var y = random_leaf({4, 3, 3}, 19);
  Var g4 = random_leaf({4}, 20), b4 = random_leaf({4}, 21);
  EXPECT_LT(worst_fd_error([&] { return project(layer_norm_channels(y, g4, b4)); }, y, 36, 1), 1e-5);
  EXPECT_LT(worst_fd_error([&] { return project(layer_norm_channels(y, g4, b4)); }, g4, 4, 1), kTol);
  EXPECT_LT(worst_fd_error([&] { return project(layer_norm_channels(y, g4, b4)); }, b4, 4, 1), kTol);
}

TEST(Autograd, GrayToRgbNormalized) {
  Var x = random_leaf({1, 3, 3}, 22, 0.0, 1.0);
  const Var y = gray_to_rgb_normalized(x, {0.5, 0.4, 0.3}, {0.2, 0.25, 0.5});
  EXPECT_NEAR(y.value()[9 + 4], (x.value()[4] - 0.4) / 0.25, 1e-15);
  EXPECT_LT(worst_fd_error([&] { return project(gray_to_rgb_normalized(x, {0.5, 0.4, 0.3}, {0.2, 0.25, 0.5})); }, x, 9, 1), kTol);
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  Var a = random_leaf({3}, 23);
  EXPECT_LT(worst_fd_error([&] { const Var t = silu(a); return sum(mul(t, t)); }, a, 3, 1), kTol);
}

TEST(Autograd, NoGradGuardSkipsTape) {
  Var a = random_leaf({3}, 24);
  NoGradGuard guard;
  EXPECT_FALSE(sum(a).requires_grad());
}

TEST(Autograd, PreconditionsRaise) {
  Var a = random_leaf({3}, 25), b = random_leaf({4}, 26);
  EXPECT_THROW(add(a, b), ArgumentError);
  EXPECT_THROW(charbonnier(a, a, 0.0), ArgumentError);
}

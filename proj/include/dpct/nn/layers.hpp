#pragma once

#include <string>
#include <vector>

#include "dpct/autograd/ops.hpp"
#include "dpct/core/rng.hpp"

namespace dpct::nn {

struct NamedParam {
  std::string name;
  ag::Var var;
};

using ParamList = std::vector<NamedParam>;

inline std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

/// Trainable leaf filled from U(-bound, bound).
ag::Var uniform_param(std::vector<int> shape, double bound, Rng& rng, bool trainable = true);
ag::Var constant_param(std::vector<int> shape, double value, bool trainable = true);

/// Stride-1 "same" convolution with odd kernel.
class Conv2d {
 public:
  Conv2d() = default;
  /// PyTorch default init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias.
  Conv2d(int in_channels, int out_channels, int kernel, Rng& rng, bool with_bias = true, bool trainable = true);

  ag::Var operator()(const ag::Var& x) const { return ag::conv2d(x, weight, bias, (kernel_ - 1) / 2); }
  void collect(const std::string& prefix, ParamList& out) const;
  void zero();

  int in_channels() const { return weight.dim(1); }
  int out_channels() const { return weight.dim(0); }
  int kernel() const { return kernel_; }

  ag::Var weight;
  ag::Var bias;

 private:
  int kernel_ = 1;
};

class DepthwiseConv2d {
 public:
  DepthwiseConv2d() = default;
  DepthwiseConv2d(int channels, int kernel, Rng& rng);

  ag::Var operator()(const ag::Var& x) const { return ag::depthwise_conv2d(x, weight, bias, (kernel_ - 1) / 2); }
  void collect(const std::string& prefix, ParamList& out) const;
  int kernel() const { return kernel_; }

  ag::Var weight;
  ag::Var bias;

 private:
  int kernel_ = 1;
};

/// Layer normalization across channels at every pixel.
class ChannelLayerNorm {
 public:
  ChannelLayerNorm() = default;
  explicit ChannelLayerNorm(int channels);

  ag::Var operator()(const ag::Var& x) const { return ag::layer_norm_channels(x, gamma, beta); }
  void collect(const std::string& prefix, ParamList& out) const;

  ag::Var gamma;
  ag::Var beta;
};

}  // namespace dpct::nn

#include "dpct/nn/layers.hpp"

#include <cmath>

namespace dpct::nn {

ag::Var uniform_param(std::vector<int> shape, double bound, Rng& rng, bool trainable) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return ag::Var::leaf(std::move(shape), std::move(v), trainable);
}

ag::Var constant_param(std::vector<int> shape, double value, bool trainable) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return ag::Var::leaf(std::move(shape), std::vector<double>(n, value), trainable);
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, Rng& rng, bool with_bias, bool trainable)
    : kernel_(kernel) {
  require(in_channels > 0 && out_channels > 0, "Conv2d: channel counts must be positive");
  require(kernel > 0 && kernel % 2 == 1, "Conv2d: kernel must be odd");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel));
  weight = uniform_param({out_channels, in_channels, kernel, kernel}, bound, rng, trainable);
  if (with_bias) bias = uniform_param({out_channels}, bound, rng, trainable);
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({join(prefix, "weight"), weight});
  if (bias) out.push_back({join(prefix, "bias"), bias});
}

void Conv2d::zero() {
  auto& w = weight.mutable_value();
  std::fill(w.begin(), w.end(), 0.0);
  if (bias) {
    auto& b = bias.mutable_value();
    std::fill(b.begin(), b.end(), 0.0);
  }
}

DepthwiseConv2d::DepthwiseConv2d(int channels, int kernel, Rng& rng) : kernel_(kernel) {
  require(channels > 0, "DepthwiseConv2d: channel count must be positive");
  require(kernel > 0 && kernel % 2 == 1, "DepthwiseConv2d: kernel must be odd");
  const double bound = 1.0 / static_cast<double>(kernel);
  weight = uniform_param({channels, 1, kernel, kernel}, bound, rng);
  bias = uniform_param({channels}, bound, rng);
}

void DepthwiseConv2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({join(prefix, "weight"), weight});
  out.push_back({join(prefix, "bias"), bias});
}

ChannelLayerNorm::ChannelLayerNorm(int channels)
    : gamma(constant_param({channels}, 1.0)), beta(constant_param({channels}, 0.0)) {}

void ChannelLayerNorm::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({join(prefix, "gamma"), gamma});
  out.push_back({join(prefix, "beta"), beta});
}

}  // namespace dpct::nn

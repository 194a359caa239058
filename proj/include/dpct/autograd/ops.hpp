#pragma once

#include <array>
#include <vector>

#include "dpct/autograd/var.hpp"

namespace dpct::ag {

// Elementwise arithmetic. Operands must have equal element counts; the result takes `a`'s shape.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

Var relu(const Var& x);
Var silu(const Var& x);
Var softplus(const Var& x);
/// -exp(x); used to keep state matrices strictly negative.
Var neg_exp(const Var& x);

Var sum(const Var& x);
Var mean(const Var& x);
/// mean((a - b)^2)
Var mse(const Var& a, const Var& b);
/// mean(sqrt((a - b)^2 + eps^2))
Var charbonnier(const Var& a, const Var& b, double eps);

/// x: (C, H, W); s: (C). Multiplies every plane by its channel scalar.
Var mul_channel(const Var& x, const Var& s);
/// x: (C, H, W); b: (C).
Var add_channel(const Var& x, const Var& b);

/// Dense stride-1 convolution. x: (Cin, H, W); w: (Cout, Cin, k, k); bias (Cout) may be empty.
/// Output spatial size is (H + 2*pad - k + 1, W + 2*pad - k + 1).
Var conv2d(const Var& x, const Var& w, const Var& bias, int pad);
/// Depthwise stride-1 convolution. x: (C, H, W); w: (C, 1, k, k); bias (C) may be empty.
Var depthwise_conv2d(const Var& x, const Var& w, const Var& bias, int pad);
/// 2x2 max pooling with stride 2 (floor on odd extents).
Var maxpool2(const Var& x);

Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& x, int begin, int count);

/// Normalizes the channel vector at every pixel, then applies the per-channel affine.
Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

/// (1, H, W) -> (3, H, W) with y_c = (x - mean_c) / std_c.
Var gray_to_rgb_normalized(const Var& x, const std::array<double, 3>& mean, const std::array<double, 3>& std);

}  // namespace dpct::ag

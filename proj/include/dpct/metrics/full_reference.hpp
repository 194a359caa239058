#pragma once

#include <vector>

#include "dpct/core/tensor.hpp"

namespace dpct::metrics {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(peak^2 / MSE); kPsnrCap when the images are identical.
double psnr(const Image& x, const Image& y, double peak = 1.0);

/// Normalized 1D Gaussian of odd length `size`.
std::vector<double> gaussian_kernel(int size, double sigma);

/// Separable 2D correlation keeping only fully-covered positions.
Image filter_valid(const Image& img, const std::vector<double>& kernel);

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Per-position SSIM over a Gaussian window (valid positions only).
Image ssim_map(const Image& x, const Image& y, const SsimConfig& cfg = {});
/// Mean of ssim_map.
double ssim(const Image& x, const Image& y, const SsimConfig& cfg = {});

/// Pixel-domain multiscale visual information fidelity (4 scales). `x` is the reference.
/// Inputs are rescaled to [0, 255] from [0, data_range] so the fixed noise variance keeps its meaning.
double vif_p(const Image& x, const Image& y, double data_range = 1.0);

}  // namespace dpct::metrics

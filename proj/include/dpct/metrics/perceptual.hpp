#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "dpct/core/tensor.hpp"
#include "dpct/dprlf/vgg.hpp"

namespace dpct::metrics {

/// Per-channel weights for each of the five backbone taps. Empty = unit weights (uncalibrated).
struct PerceptualCalibration {
  std::array<std::vector<double>, dprlf::Vgg16::kBlocks> weights;

  bool calibrated() const { return !weights[0].empty(); }
  /// Reads linear-head weights named lin0.model.1.weight ... lin4.model.1.weight, each (1, C, 1, 1).
  static PerceptualCalibration load(const std::filesystem::path& path);
};

/// Unit-normalizes backbone features across channels at every position, then sums the
/// (weighted) squared differences over channels, averages over space and sums over taps.
double perceptual_distance(const dprlf::Vgg16& backbone, const Image& x, const Image& y,
                           const PerceptualCalibration& calibration = {});

/// Weights over the 1475 channels of the six stages (input RGB + five taps).
struct DistsWeights {
  std::vector<double> alpha;  // mean (luminance-like) terms
  std::vector<double> beta;   // covariance terms

  bool calibrated() const { return !alpha.empty(); }
  /// Reads `alpha` and `beta`, each (1, 1475, 1, 1); both are normalized by their joint sum.
  static DistsWeights load(const std::filesystem::path& path);
};

struct DistsBreakdown {
  double similarity = 0.0;
  /// Per stage, per channel: (2 mu_x mu_y + c1) / (mu_x^2 + mu_y^2 + c1).
  std::vector<std::vector<double>> mean_terms;
  /// Per stage, per channel: (2 cov_xy + c2) / (var_x + var_y + c2).
  std::vector<std::vector<double>> covariance_terms;
};

/// Structure/texture similarity: weighted sum of mean and covariance agreement over all stages
/// (equal weights when uncalibrated). 1 at x = y.
DistsBreakdown dists_breakdown(const dprlf::Vgg16& backbone, const Image& x, const Image& y,
                               const DistsWeights& weights = {});
inline double dists(const dprlf::Vgg16& backbone, const Image& x, const Image& y, const DistsWeights& weights = {}) {
  return dists_breakdown(backbone, x, y, weights).similarity;
}

}  // namespace dpct::metrics

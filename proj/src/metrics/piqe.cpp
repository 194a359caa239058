#include "dpct/metrics/piqe.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dpct::metrics {

namespace {

constexpr int kBlock = 16;
constexpr int kSegment = 6;
constexpr double kActivityThreshold = 0.1;
constexpr double kImpairedThreshold = 0.1;

double sample_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Gaussian 7x7 (sigma 7/6) with replicated borders.
Image gaussian_replicate(const Image& img) {
  constexpr int h = 3;
  std::vector<double> k(2 * h + 1);
  double sum = 0.0;
  for (int i = -h; i <= h; ++i) sum += k[i + h] = std::exp(-0.5 * i * i / (49.0 / 36.0));
  for (double& v : k) v /= sum;
  const int R = img.rows(), C = img.cols();
  Image tmp(R, C), out(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int i = -h; i <= h; ++i) acc += k[i + h] * img(r, std::clamp(c + i, 0, C - 1));
      tmp(r, c) = acc;
    }
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int i = -h; i <= h; ++i) acc += k[i + h] * tmp(std::clamp(r + i, 0, R - 1), c);
      out(r, c) = acc;
    }
  return out;
}

// A block edge is impaired when any run of 6 contiguous pixels along it is nearly flat.
bool noticeable_artifact(const Image& n, int r0, int c0) {
  std::vector<double> edges[4];
  for (int i = 0; i < kBlock; ++i) {
    edges[0].push_back(n(r0, c0 + i));
    edges[1].push_back(n(r0 + i, c0 + kBlock - 1));
    edges[2].push_back(n(r0 + kBlock - 1, c0 + i));
    edges[3].push_back(n(r0 + i, c0));
  }
  for (int s = 0; s + kSegment <= kBlock; ++s)
    for (const auto& e : edges)
      if (sample_std(std::vector<double>(e.begin() + s, e.begin() + s + kSegment)) < kImpairedThreshold) return true;
  return false;
}

// Noise: the centre two columns deviate in spread from their surround relative to the block spread.
bool noisy(const Image& n, int r0, int c0, double block_var) {
  const double sigma = std::sqrt(block_var);
  std::vector<double> center, surround;
  for (int r = 0; r < kBlock; ++r)
    for (int c = 0; c < kBlock; ++c) (c == 7 || c == 8 ? center : surround).push_back(n(r0 + r, c0 + c));
  const double ss = sample_std(surround);
  const double ratio = ss > 0 ? sample_std(center) / ss : 0.0;
  const double beta = std::abs(sigma - ratio) / std::max(sigma, ratio);
  return sigma > 2.0 * beta;
}

}  // namespace

PiqeResult piqe_details(const Image& img, double data_range) {
  require(img.rows() >= kBlock && img.cols() >= kBlock, "piqe: image must be at least 16x16");
  require(data_range > 0, "piqe: data range must be positive");
  const int R = (img.rows() + kBlock - 1) / kBlock * kBlock, C = (img.cols() + kBlock - 1) / kBlock * kBlock;
  Image x(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) x(r, c) = 255.0 / data_range * img(std::min(r, img.rows() - 1), std::min(c, img.cols() - 1));

  Image sq = x;
  for (double& v : sq.data()) v *= v;
  const Image mu = gaussian_replicate(x), mu2 = gaussian_replicate(sq);
  Image n(R, C);
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double sigma = std::sqrt(std::abs(mu2.data()[i] - mu.data()[i] * mu.data()[i]));
    n.data()[i] = (x.data()[i] - mu.data()[i]) / (sigma + 1.0);
  }

  PiqeResult res;
  double distorted_sum = 0.0;
  for (int r0 = 0; r0 < R; r0 += kBlock)
    for (int c0 = 0; c0 < C; c0 += kBlock) {
      ++res.n_blocks;
      std::vector<double> block;
      for (int r = 0; r < kBlock; ++r)
        for (int c = 0; c < kBlock; ++c) block.push_back(n(r0 + r, c0 + c));
      const double sd = sample_std(block);
      const double var = sd * sd;
      if (var <= kActivityThreshold) continue;
      ++res.n_active;
      const bool artifact = noticeable_artifact(n, r0, c0);
      const bool noise = noisy(n, r0, c0, var);
      if (artifact || noise) ++res.n_distorted;
      distorted_sum += (artifact ? 1.0 - var : 0.0) + (noise ? var : 0.0);
    }
  res.score = 100.0 * (distorted_sum + 1.0) / (res.n_active + 1.0);
  return res;
}

}  // namespace dpct::metrics

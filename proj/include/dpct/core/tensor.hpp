#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dpct/core/error.hpp"

namespace dpct {

/// Single-channel row-major 2D array of doubles.
class Image {
 public:
  Image() = default;
  Image(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), px_(static_cast<std::size_t>(rows) * cols, fill) {
    require(rows >= 0 && cols >= 0, "Image: negative extent");
  }
  Image(int rows, int cols, std::vector<double> px)
      : rows_(rows), cols_(cols), px_(std::move(px)) {
    require(px_.size() == static_cast<std::size_t>(rows) * cols, "Image: pixel count mismatch");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return px_.size(); }
  bool empty() const noexcept { return px_.empty(); }

  double& operator()(int r, int c) noexcept { return px_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const noexcept { return px_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> pixels() noexcept { return px_; }
  std::span<const double> pixels() const noexcept { return px_; }
  std::vector<double>& data() noexcept { return px_; }
  const std::vector<double>& data() const noexcept { return px_; }

  bool same_shape(const Image& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const noexcept {
    for (double v : px_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> px_;
};

/// Channel-major (C x H x W) activation tensor.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, double fill = 0.0)
      : c_(channels), h_(height), w_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {
    require(channels >= 0 && height >= 0 && width >= 0, "FeatureMap: negative extent");
  }
  FeatureMap(int channels, int height, int width, std::vector<double> data)
      : c_(channels), h_(height), w_(width), data_(std::move(data)) {
    require(data_.size() == static_cast<std::size_t>(channels) * height * width,
            "FeatureMap: element count mismatch");
  }

  static FeatureMap from_image(const Image& img) {
    return FeatureMap(1, img.rows(), img.cols(), img.data());
  }

  int channels() const noexcept { return c_; }
  int height() const noexcept { return h_; }
  int width() const noexcept { return w_; }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h_) * w_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(int c, int y, int x) noexcept { return data_[c * plane() + static_cast<std::size_t>(y) * w_ + x]; }
  double operator()(int c, int y, int x) const noexcept { return data_[c * plane() + static_cast<std::size_t>(y) * w_ + x]; }

  std::span<double> channel(int c) noexcept { return {data_.data() + c * plane(), plane()}; }
  std::span<const double> channel(int c) const noexcept { return {data_.data() + c * plane(), plane()}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const FeatureMap& o) const noexcept { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  bool all_finite() const noexcept {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Image channel_image(int c) const {
    auto ch = channel(c);
    return Image(h_, w_, std::vector<double>(ch.begin(), ch.end()));
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int c_ = 0;
  int h_ = 0;
  int w_ = 0;
  std::vector<double> data_;
};

}  // namespace dpct

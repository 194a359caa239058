#pragma once

#include <memory>

#include "dpct/nn/layers.hpp"
#include "dpct/videx/encoder.hpp"

namespace dpct::videx {

/// Local detail branch: W2 * ReLU(W1 * I), both 3x3 with zero padding 1.
class Ldeb {
 public:
  Ldeb() = default;
  Ldeb(int channels, Rng& rng);

  ag::Var operator()(const ag::Var& image) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

  nn::Conv2d conv1;
  nn::Conv2d conv2;
};

/// Fusion: concat(Z, F) -> 1x1 conv (with bias) -> SiLU.
class Fuse2fm {
 public:
  Fuse2fm() = default;
  Fuse2fm(int semantic_channels, int detail_channels, int out_channels, Rng& rng);

  ag::Var operator()(const ag::Var& Z, const ag::Var& F) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

  nn::Conv2d proj;
};

/// Dual-path extractor: frozen semantic prior Z plus trainable local details, fused.
class ViDex {
 public:
  ViDex() = default;
  ViDex(std::shared_ptr<const SemanticEncoder> encoder, int detail_channels, int out_channels, Rng& rng);

  /// Dense semantic map Z (C, H, W) for a [0, 1] image; computed without gradients.
  FeatureMap semantic(const Image& unit) const;
  /// image: (1, H, W) in [0, 1]; Z may be precomputed with semantic().
  ag::Var operator()(const ag::Var& image, const FeatureMap& Z) const;
  ag::Var operator()(const ag::Var& image) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

  const SemanticEncoder& encoder() const { return *encoder_; }

  Ldeb ldeb;
  Fuse2fm fuse;

 private:
  std::shared_ptr<const SemanticEncoder> encoder_;
};

}  // namespace dpct::videx

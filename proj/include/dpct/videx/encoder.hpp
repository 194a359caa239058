#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dpct/core/tensor.hpp"
#include "json.hpp"

namespace dpct::videx {

inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

/// Non-overlapping patch tokens of a normalized 3-channel image.
struct TokenGrid {
  int grid_h = 0;
  int grid_w = 0;
  int patch = 0;
  int rows = 0;  // unpadded source extent
  int cols = 0;
  /// (grid_h * grid_w) x (3 * patch * patch), token-major; each token is laid out (channel, y, x).
  std::vector<double> tokens;

  int count() const { return grid_h * grid_w; }
  int token_size() const { return 3 * patch * patch; }
};

/// Reflect-pads (mirror without edge repeat) on the bottom and right edges.
Image reflect_pad(const Image& img, int rows, int cols);

/// Replicates a [0, 1] single-channel image to 3 channels, applies ImageNet normalization,
/// reflect-pads to a multiple of `patch`, and cuts the result into patch tokens.
TokenGrid patchify(const Image& unit, int patch = 16);

struct SemanticEncoderConfig {
  int patch_size = 16;
  int depth = 12;
  int embed_dim = 192;
  int heads = 3;
  int mlp_ratio = 4;
  int out_dim = 192;
  /// Archive of pretrained weights; empty selects the seeded random-init fallback.
  std::string weights_path;
  std::uint64_t seed = 0x5EB0;

  nlohmann::json to_json() const;
  static SemanticEncoderConfig from_json(const nlohmann::json& j);
};

/// Frozen pre-norm vision transformer producing dense patch embeddings X (out_dim, H/p, W/p).
/// Holds no trainable parameters: it never takes part in gradient computation.
class SemanticEncoder {
 public:
  explicit SemanticEncoder(const SemanticEncoderConfig& cfg);

  FeatureMap encode(const TokenGrid& grid) const;
  FeatureMap operator()(const Image& unit) const { return encode(patchify(unit, cfg_.patch_size)); }

  bool pretrained() const { return pretrained_; }
  const SemanticEncoderConfig& config() const { return cfg_; }
  std::uint64_t checksum() const;
  std::size_t parameter_count() const;

  struct Linear {
    std::vector<double> w;  // (out, in)
    std::vector<double> b;  // (out); may be empty
    int in = 0, out = 0;
  };
  struct Norm {
    std::vector<double> gamma, beta;
  };
  struct Block {
    Norm norm1, norm2;
    Linear qkv, proj, fc1, fc2;
    std::vector<double> ls1, ls2;  // optional layer-scale
  };

 private:
  void init_random();
  void load(const std::filesystem::path& path);
  std::vector<double> position_embedding(int gh, int gw) const;

  SemanticEncoderConfig cfg_;
  bool pretrained_ = false;
  Linear patch_embed_;
  std::vector<double> pos_embed_;  // (pos_h * pos_w, D) or empty for sin-cos
  int pos_h_ = 0, pos_w_ = 0;
  std::vector<double> cls_token_, cls_pos_;
  std::vector<Block> blocks_;
  Norm norm_;
  Linear out_proj_;  // empty when out_dim == embed_dim and no projection was loaded
};

/// Bilinear (half-pixel centres, edge clamped) upsampling by `factor`, then a top-left crop to rows x cols.
FeatureMap upsample_semantic(const FeatureMap& X, int factor, int rows, int cols);

}  // namespace dpct::videx

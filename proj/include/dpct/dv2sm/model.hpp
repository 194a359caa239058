#pragma once

#include <memory>

#include "dpct/dv2sm/blocks.hpp"
#include "dpct/videx/videx.hpp"
#include "json.hpp"

namespace dpct::dv2sm {

struct ModelConfig {
  int n_groups = 4;
  int blocks_per_group = 3;
  int embed_dim = 96;
  int state_dim = 16;
  int expand = 2;
  int dt_rank = 0;  // 0 = ceil(embed_dim / 16)
  std::vector<int> mvb_kernels{3, 5, 7};
  double skip_scale_init = 1.0;
  int ldeb_channels = 64;
  bool global_residual = true;
  bool zero_init_head = true;
  std::uint64_t seed = 0;
  videx::SemanticEncoderConfig encoder;

  Gl2sbConfig block_config() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  void validate() const;
};

/// I -> ViDex -> VSSG x n_groups -> 3x3 head -> (+ I).
/// Images are (1, H, W) in the [0, 1] network scale.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);
  Model(const ModelConfig& cfg, std::shared_ptr<const videx::SemanticEncoder> encoder);

  ag::Var forward(const ag::Var& image) const;
  /// Forward with a precomputed semantic map Z = extractor.semantic(image).
  ag::Var forward(const ag::Var& image, const FeatureMap& Z) const;
  /// Inference on a plain image; no tape is recorded.
  Image enhance(const Image& unit) const;

  /// Trainable parameters under stable hierarchical names.
  nn::ParamList parameters() const;
  std::size_t parameter_count() const;

  const ModelConfig& config() const { return cfg_; }
  const videx::SemanticEncoder& encoder() const { return extractor.encoder(); }
  std::shared_ptr<const videx::SemanticEncoder> shared_encoder() const { return encoder_; }

  videx::ViDex extractor;
  std::vector<VSSG> groups;
  nn::Conv2d head;

 private:
  ModelConfig cfg_;
  std::shared_ptr<const videx::SemanticEncoder> encoder_;
};

}  // namespace dpct::dv2sm

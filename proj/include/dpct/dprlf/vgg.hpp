#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpct/autograd/ops.hpp"
#include "json.hpp"

namespace dpct::dprlf {

struct BackboneConfig {
  /// Archive with torchvision-style names (features.N.weight / features.N.bias); empty = no file.
  std::string weights_path;
  /// Seeded Kaiming-normal initialization when no weights file is given.
  bool allow_random_fallback = true;
  std::uint64_t seed = 0x7616;

  nlohmann::json to_json() const;
  static BackboneConfig from_json(const nlohmann::json& j);
};

/// Frozen 16-layer VGG feature extractor. Inputs are single-channel [0, 1] images (1, H, W),
/// replicated to RGB and ImageNet-normalized. Block outputs are taken after the last ReLU of
/// each of the five convolution blocks, before pooling.
class Vgg16 {
 public:
  static constexpr int kBlocks = 5;

  explicit Vgg16(const BackboneConfig& cfg = {});

  /// Outputs of blocks 1..up_to_block. Gradients flow to the input only.
  std::vector<ag::Var> features(const ag::Var& image, int up_to_block = kBlocks) const;

  bool pretrained() const { return pretrained_; }
  std::uint64_t checksum() const;
  std::size_t parameter_count() const;

  /// Channel width of each block output.
  static constexpr int block_channels(int block) { return block == 1 ? 64 : block == 2 ? 128 : block == 3 ? 256 : 512; }

 private:
  struct Layer {
    ag::Var weight, bias;
  };
  std::vector<std::vector<Layer>> blocks_;
  bool pretrained_ = false;
};

}  // namespace dpct::dprlf

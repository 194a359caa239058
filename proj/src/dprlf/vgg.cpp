#include "dpct/dprlf/vgg.hpp"

#include <cmath>
#include <random>

#include "dpct/core/checksum.hpp"
#include "dpct/core/rng.hpp"
#include "dpct/io/archive.hpp"
#include "dpct/videx/encoder.hpp"

namespace dpct::dprlf {

namespace {

constexpr int kLayersPerBlock[Vgg16::kBlocks] = {2, 2, 3, 3, 3};

}  // namespace

nlohmann::json BackboneConfig::to_json() const {
  return {{"weights_path", weights_path}, {"allow_random_fallback", allow_random_fallback}, {"seed", seed}};
}

BackboneConfig BackboneConfig::from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.weights_path = j.value("weights_path", c.weights_path);
  c.allow_random_fallback = j.value("allow_random_fallback", c.allow_random_fallback);
  c.seed = j.value("seed", c.seed);
  return c;
}

Vgg16::Vgg16(const BackboneConfig& cfg) {
  io::Archive ar;
  if (!cfg.weights_path.empty()) {
    ar = io::load_archive(cfg.weights_path);
    pretrained_ = true;
  } else if (!cfg.allow_random_fallback) {
    throw LoadError("VGG16 backbone: no weights file configured and the random fallback is disabled");
  }
  Rng rng = make_rng(cfg.seed, 0x9616);
  int in = 3, index = 0;  // torchvision `features` index
  for (int b = 0; b < kBlocks; ++b) {
    const int out = block_channels(b + 1);
    std::vector<Layer> layers;
    for (int l = 0; l < kLayersPerBlock[b]; ++l) {
      std::vector<double> w(static_cast<std::size_t>(out) * in * 9), bias(static_cast<std::size_t>(out), 0.0);
      if (pretrained_) {
        const std::string name = "features." + std::to_string(index);
        auto take = [&](const std::string& key, const std::vector<int>& shape) {
          auto it = ar.tensors.find(key);
          if (it == ar.tensors.end()) throw LoadError("VGG16 weights: missing tensor '" + key + "'");
          if (it->second.shape != shape) throw LoadError("VGG16 weights: tensor '" + key + "' has an unexpected shape");
          return it->second.values;
        };
        w = take(name + ".weight", {out, in, 3, 3});
        bias = take(name + ".bias", {out});
      } else {
        std::normal_distribution<double> g(0.0, std::sqrt(2.0 / (out * 9.0)));
        for (double& v : w) v = g(rng);
      }
      layers.push_back({ag::Var::constant({out, in, 3, 3}, std::move(w)), ag::Var::constant({out}, std::move(bias))});
      in = out;
      index += 2;  // conv, relu
    }
    blocks_.push_back(std::move(layers));
    ++index;  // pool
  }
}

std::vector<ag::Var> Vgg16::features(const ag::Var& image, int up_to_block) const {
  require(up_to_block >= 1 && up_to_block <= kBlocks, "Vgg16: block index out of range");
  require(image.rank() == 3 && image.dim(0) == 1, "Vgg16: input must be single-channel (1, H, W)");
  const int need = 1 << (up_to_block - 1);
  require(image.dim(1) >= need && image.dim(2) >= need, "Vgg16: input too small for the requested depth");
  ag::Var x = ag::gray_to_rgb_normalized(image, videx::kImageNetMean, videx::kImageNetStd);
  std::vector<ag::Var> out;
  for (int b = 0; b < up_to_block; ++b) {
    if (b > 0) x = ag::maxpool2(x);
    for (const Layer& l : blocks_[b]) x = ag::relu(ag::conv2d(x, l.weight, l.bias, 1));
    out.push_back(x);
  }
  return out;
}

std::uint64_t Vgg16::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& blk : blocks_)
    for (const Layer& l : blk) h = fnv1a(l.bias.value(), fnv1a(l.weight.value(), h));
  return h;
}

std::size_t Vgg16::parameter_count() const {
  std::size_t n = 0;
  for (const auto& blk : blocks_)
    for (const Layer& l : blk) n += l.weight.numel() + l.bias.numel();
  return n;
}

}  // namespace dpct::dprlf

#include "dpct/videx/videx.hpp"

namespace dpct::videx {

Ldeb::Ldeb(int channels, Rng& rng) : conv1(1, channels, 3, rng), conv2(channels, channels, 3, rng) {}

ag::Var Ldeb::operator()(const ag::Var& image) const {
  require(image.rank() == 3 && image.dim(0) == 1, "ldeb_extract: input must be single-channel (1, H, W)");
  return conv2(ag::relu(conv1(image)));
}

void Ldeb::collect(const std::string& prefix, nn::ParamList& out) const {
  conv1.collect(nn::join(prefix, "conv1"), out);
  conv2.collect(nn::join(prefix, "conv2"), out);
}

Fuse2fm::Fuse2fm(int semantic_channels, int detail_channels, int out_channels, Rng& rng)
    : proj(semantic_channels + detail_channels, out_channels, 1, rng) {}

ag::Var Fuse2fm::operator()(const ag::Var& Z, const ag::Var& F) const {
  require(Z.rank() == 3 && F.rank() == 3, "fuse_2fm: inputs must be (C, H, W)");
  require(Z.dim(1) == F.dim(1) && Z.dim(2) == F.dim(2), "fuse_2fm: semantic and detail maps differ in spatial shape");
  require(Z.dim(0) + F.dim(0) == proj.in_channels(), "fuse_2fm: channel counts do not match the fusion weights");
  return ag::silu(proj(ag::concat_channels({Z, F})));
}

void Fuse2fm::collect(const std::string& prefix, nn::ParamList& out) const { proj.collect(nn::join(prefix, "proj"), out); }

ViDex::ViDex(std::shared_ptr<const SemanticEncoder> encoder, int detail_channels, int out_channels, Rng& rng)
    : ldeb(detail_channels, rng),
      fuse(encoder->config().out_dim, detail_channels, out_channels, rng),
      encoder_(std::move(encoder)) {}

FeatureMap ViDex::semantic(const Image& unit) const {
  const FeatureMap X = (*encoder_)(unit);
  return upsample_semantic(X, encoder_->config().patch_size, unit.rows(), unit.cols());
}

ag::Var ViDex::operator()(const ag::Var& image, const FeatureMap& Z) const {
  return fuse(ag::Var::from(Z), ldeb(image));
}

ag::Var ViDex::operator()(const ag::Var& image) const {
  require(image.rank() == 3 && image.dim(0) == 1, "ViDex: input must be single-channel (1, H, W)");
  const Image unit(image.dim(1), image.dim(2), std::vector<double>(image.value().begin(), image.value().end()));
  return (*this)(image, semantic(unit));
}

void ViDex::collect(const std::string& prefix, nn::ParamList& out) const {
  ldeb.collect(nn::join(prefix, "ldeb"), out);
  fuse.collect(nn::join(prefix, "fuse"), out);
}

}  // namespace dpct::videx

#include "dpct/dv2sm/model.hpp"

#include "dpct/core/rng.hpp"

namespace dpct::dv2sm {

Gl2sbConfig ModelConfig::block_config() const {
  Gl2sbConfig g;
  g.ssm.embed_dim = embed_dim;
  g.ssm.state_dim = state_dim;
  g.ssm.expand = expand;
  g.ssm.dt_rank = dt_rank;
  g.mvb_kernels = mvb_kernels;
  g.skip_scale_init = skip_scale_init;
  return g;
}

void ModelConfig::validate() const {
  require(n_groups >= 1 && blocks_per_group >= 1, "ModelConfig: n_groups and blocks_per_group must be >= 1");
  require(embed_dim >= 1 && state_dim >= 1 && expand >= 1 && dt_rank >= 0 && ldeb_channels >= 1,
          "ModelConfig: dimensions must be positive");
  require(!mvb_kernels.empty(), "ModelConfig: mvb_kernels must not be empty");
  for (int k : mvb_kernels) require(k > 0 && k % 2 == 1, "ModelConfig: mvb kernels must be odd");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"n_groups", n_groups},
          {"blocks_per_group", blocks_per_group},
          {"embed_dim", embed_dim},
          {"state_dim", state_dim},
          {"expand", expand},
          {"dt_rank", dt_rank},
          {"mvb_kernels", mvb_kernels},
          {"skip_scale_init", skip_scale_init},
          {"ldeb_channels", ldeb_channels},
          {"global_residual", global_residual},
          {"zero_init_head", zero_init_head},
          {"seed", seed},
          {"encoder", encoder.to_json()}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_groups = j.value("n_groups", c.n_groups);
  c.blocks_per_group = j.value("blocks_per_group", c.blocks_per_group);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.state_dim = j.value("state_dim", c.state_dim);
  c.expand = j.value("expand", c.expand);
  c.dt_rank = j.value("dt_rank", c.dt_rank);
  c.mvb_kernels = j.value("mvb_kernels", c.mvb_kernels);
  c.skip_scale_init = j.value("skip_scale_init", c.skip_scale_init);
  c.ldeb_channels = j.value("ldeb_channels", c.ldeb_channels);
  c.global_residual = j.value("global_residual", c.global_residual);
  c.zero_init_head = j.value("zero_init_head", c.zero_init_head);
  c.seed = j.value("seed", c.seed);
  if (j.contains("encoder")) c.encoder = videx::SemanticEncoderConfig::from_json(j.at("encoder"));
  c.validate();
  return c;
}

Model::Model(const ModelConfig& cfg) : Model(cfg, std::make_shared<const videx::SemanticEncoder>(cfg.encoder)) {}

Model::Model(const ModelConfig& cfg, std::shared_ptr<const videx::SemanticEncoder> encoder)
    : cfg_(cfg), encoder_(std::move(encoder)) {
  cfg.validate();
  require(encoder_ != nullptr, "Model: semantic encoder is required");
  Rng rng = make_rng(cfg.seed, 0xD0D0);
  extractor = videx::ViDex(encoder_, cfg.ldeb_channels, cfg.embed_dim, rng);
  const Gl2sbConfig bc = cfg.block_config();
  for (int g = 0; g < cfg.n_groups; ++g) groups.emplace_back(bc, cfg.blocks_per_group, rng);
  head = nn::Conv2d(cfg.embed_dim, 1, 3, rng, true);
  if (cfg.zero_init_head) head.zero();
}

ag::Var Model::forward(const ag::Var& image, const FeatureMap& Z) const {
  require(image.rank() == 3 && image.dim(0) == 1, "model_forward: input must be single-channel (1, H, W)");
  for (double v : image.value()) require(std::isfinite(v), "model_forward: input contains non-finite values");
  ag::Var x = extractor(image, Z);
  for (const auto& g : groups) x = g(x);
  ag::Var out = head(x);
  if (cfg_.global_residual) out = ag::add(out, image);
  return out;
}

ag::Var Model::forward(const ag::Var& image) const {
  require(image.rank() == 3 && image.dim(0) == 1, "model_forward: input must be single-channel (1, H, W)");
  for (double v : image.value()) require(std::isfinite(v), "model_forward: input contains non-finite values");
  const Image unit(image.dim(1), image.dim(2), std::vector<double>(image.value().begin(), image.value().end()));
  return forward(image, extractor.semantic(unit));
}

Image Model::enhance(const Image& unit) const {
  ag::NoGradGuard guard;
  const ag::Var y = forward(ag::Var::from(unit));
  return Image(unit.rows(), unit.cols(), std::vector<double>(y.value().begin(), y.value().end()));
}

nn::ParamList Model::parameters() const {
  nn::ParamList out;
  extractor.collect("videx", out);
  for (std::size_t g = 0; g < groups.size(); ++g) groups[g].collect("groups." + std::to_string(g), out);
  head.collect("head", out);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.var.numel();
  return n;
}

}  // namespace dpct::dv2sm

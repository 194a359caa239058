#include "dpct/dv2sm/blocks.hpp"

#include <cmath>

#include "dpct/dv2sm/selective_scan.hpp"

namespace dpct::dv2sm {

SS2D::SS2D(const SsmConfig& cfg, Rng& rng) : cfg_(cfg) {
  require(cfg.embed_dim >= 1 && cfg.state_dim >= 1 && cfg.expand >= 1, "SS2D: dimensions must be positive");
  const int C = cfg.embed_dim, E = cfg.inner_dim(), N = cfg.state_dim, R = cfg.rank();
  in_proj = nn::Conv2d(C, 2 * E, 1, rng, false);
  conv = nn::DepthwiseConv2d(E, cfg.conv_kernel, rng);
  std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(1e-1));
  for (auto& d : dirs) {
    d.x_proj = nn::Conv2d(E, R + 2 * N, 1, rng, false);
    d.dt_proj = nn::Conv2d(R, E, 1, rng, true);
    // Δ starts log-uniform in [1e-3, 1e-1]: bias = softplus^{-1}(Δ).
    for (double& b : d.dt_proj.bias.mutable_value()) {
      const double dt = std::exp(log_dt(rng));
      b = dt + std::log(-std::expm1(-dt));
    }
    std::vector<double> a_log(static_cast<std::size_t>(E) * N);
    for (int e = 0; e < E; ++e)
      for (int n = 0; n < N; ++n) a_log[static_cast<std::size_t>(e) * N + n] = std::log(static_cast<double>(n + 1));
    d.A_log = ag::Var::leaf({E, N}, std::move(a_log), true);
    d.D = nn::constant_param({E}, 1.0);
  }
  out_norm = nn::ChannelLayerNorm(E);
  out_proj = nn::Conv2d(E, C, 1, rng, false);
}

std::vector<ag::Var> SS2D::scan_branches(const ag::Var& u) const {
  const int N = cfg_.state_dim, R = cfg_.rank();
  require(u.rank() == 3 && u.dim(0) == cfg_.inner_dim(), "SS2D: scan input must have inner_dim channels");
  const auto orders = scan_orders(u.dim(1), u.dim(2));
  std::vector<ag::Var> out;
  out.reserve(4);
  for (std::size_t k = 0; k < 4; ++k) {
    const ScanDirection& d = dirs[k];
    const ag::Var proj = d.x_proj(u);
    const ag::Var delta = ag::softplus(d.dt_proj(ag::slice_channels(proj, 0, R)));
    const ag::Var B = ag::slice_channels(proj, R, N);
    const ag::Var C = ag::slice_channels(proj, R + N, N);
    out.push_back(selective_scan(u, delta, ag::neg_exp(d.A_log), B, C, d.D, orders[k]));
  }
  return out;
}

ag::Var SS2D::scan(const ag::Var& u) const {
  const auto b = scan_branches(u);
  return ag::add(ag::add(b[0], b[1]), ag::add(b[2], b[3]));
}

ag::Var SS2D::operator()(const ag::Var& x) const {
  const int E = cfg_.inner_dim();
  const ag::Var xz = in_proj(x);
  const ag::Var u = ag::silu(conv(ag::slice_channels(xz, 0, E)));
  const ag::Var z = ag::slice_channels(xz, E, E);
  return out_proj(ag::mul(out_norm(scan(u)), ag::silu(z)));
}

void SS2D::collect(const std::string& prefix, nn::ParamList& out) const {
  in_proj.collect(nn::join(prefix, "in_proj"), out);
  conv.collect(nn::join(prefix, "conv"), out);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const std::string p = nn::join(prefix, "dirs." + std::to_string(k));
    dirs[k].x_proj.collect(nn::join(p, "x_proj"), out);
    dirs[k].dt_proj.collect(nn::join(p, "dt_proj"), out);
    out.push_back({nn::join(p, "A_log"), dirs[k].A_log});
    out.push_back({nn::join(p, "D"), dirs[k].D});
  }
  out_norm.collect(nn::join(prefix, "out_norm"), out);
  out_proj.collect(nn::join(prefix, "out_proj"), out);
}

MVB::MVB(int channels, const std::vector<int>& kernels, Rng& rng) {
  require(!kernels.empty(), "MVB: at least one kernel size is required");
  for (int k : kernels) convs.emplace_back(channels, k, rng);
  fuse = nn::Conv2d(channels * static_cast<int>(kernels.size()), channels, 1, rng, true);
}

std::vector<ag::Var> MVB::branches(const ag::Var& x) const {
  std::vector<ag::Var> out;
  out.reserve(convs.size());
  for (const auto& c : convs) out.push_back(c(x));
  return out;
}

ag::Var MVB::operator()(const ag::Var& x) const { return fuse(ag::concat_channels(branches(x))); }

void MVB::collect(const std::string& prefix, nn::ParamList& out) const {
  for (std::size_t i = 0; i < convs.size(); ++i) convs[i].collect(nn::join(prefix, "convs." + std::to_string(i)), out);
  fuse.collect(nn::join(prefix, "fuse"), out);
}

GL2SB::GL2SB(const Gl2sbConfig& cfg, Rng& rng)
    : norm(cfg.ssm.embed_dim),
      ss2d(cfg.ssm, rng),
      mvb(cfg.ssm.embed_dim, cfg.mvb_kernels, rng),
      skip_scale(nn::constant_param({cfg.ssm.embed_dim}, cfg.skip_scale_init)) {
  for (int k : cfg.mvb_kernels) require(k > 0 && k % 2 == 1, "GL2SB: MVB kernels must be odd");
}

ag::Var GL2SB::operator()(const ag::Var& x) const {
  require(x.rank() == 3 && x.dim(0) == static_cast<int>(skip_scale.numel()),
          "GL2SB: input channel count does not match embed_dim");
  const ag::Var n = norm(x);
  return ag::add(ag::add(ag::mul_channel(x, skip_scale), ss2d(n)), mvb(n));
}

void GL2SB::collect(const std::string& prefix, nn::ParamList& out) const {
  norm.collect(nn::join(prefix, "norm"), out);
  ss2d.collect(nn::join(prefix, "ss2d"), out);
  mvb.collect(nn::join(prefix, "mvb"), out);
  out.push_back({nn::join(prefix, "skip_scale"), skip_scale});
}

void GL2SB::zero_branches() {
  ss2d.out_proj.zero();
  mvb.fuse.zero();
}

VSSG::VSSG(const Gl2sbConfig& cfg, int n_blocks, Rng& rng) {
  require(n_blocks >= 1, "VSSG: at least one block is required");
  for (int i = 0; i < n_blocks; ++i) blocks.emplace_back(cfg, rng);
  conv = nn::Conv2d(cfg.ssm.embed_dim, cfg.ssm.embed_dim, 3, rng, true);
}

ag::Var VSSG::body(const ag::Var& x) const {
  ag::Var y = x;
  for (const auto& b : blocks) y = b(y);
  return conv(y);
}

void VSSG::collect(const std::string& prefix, nn::ParamList& out) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(nn::join(prefix, "blocks." + std::to_string(i)), out);
  conv.collect(nn::join(prefix, "conv"), out);
}

}  // namespace dpct::dv2sm

#pragma once

#include <array>
#include <vector>

#include "dpct/nn/layers.hpp"

namespace dpct::dv2sm {

struct SsmConfig {
  int embed_dim = 96;
  int state_dim = 16;
  int expand = 2;
  int dt_rank = 0;  // 0 = ceil(embed_dim / 16)
  int conv_kernel = 3;

  int inner_dim() const { return expand * embed_dim; }
  int rank() const { return dt_rank > 0 ? dt_rank : (embed_dim + 15) / 16; }
};

/// Selective-scan parameters of one scan direction.
struct ScanDirection {
  nn::Conv2d x_proj;   // E -> R + 2N, no bias
  nn::Conv2d dt_proj;  // R -> E, bias
  ag::Var A_log;       // (E, N); A = -exp(A_log)
  ag::Var D;           // (E)
};

/// Four-directional 2D selective scan block:
/// in_proj -> (u, z); u <- SiLU(dwconv(u)); y = Σ_dir scan_dir(u); out_proj(LN(y) ⊙ SiLU(z)).
class SS2D {
 public:
  SS2D() = default;
  SS2D(const SsmConfig& cfg, Rng& rng);

  ag::Var operator()(const ag::Var& x) const;
  /// The four direction outputs for an already-projected map u (E, H, W), before merging.
  std::vector<ag::Var> scan_branches(const ag::Var& u) const;
  /// Sum of scan_branches(u).
  ag::Var scan(const ag::Var& u) const;

  void collect(const std::string& prefix, nn::ParamList& out) const;
  const SsmConfig& config() const { return cfg_; }

  nn::Conv2d in_proj;
  nn::DepthwiseConv2d conv;
  std::array<ScanDirection, 4> dirs;
  nn::ChannelLayerNorm out_norm;
  nn::Conv2d out_proj;

 private:
  SsmConfig cfg_;
};

/// Multiscale block: parallel depthwise convolutions concatenated and fused by a 1x1 projection.
class MVB {
 public:
  MVB() = default;
  MVB(int channels, const std::vector<int>& kernels, Rng& rng);

  ag::Var operator()(const ag::Var& x) const;
  /// Pre-fusion branch responses, one per kernel size.
  std::vector<ag::Var> branches(const ag::Var& x) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

  std::vector<nn::DepthwiseConv2d> convs;
  nn::Conv2d fuse;
};

struct Gl2sbConfig {
  SsmConfig ssm;
  std::vector<int> mvb_kernels{3, 5, 7};
  double skip_scale_init = 1.0;
};

/// y = s ⊙ x + SS2D(LN(x)) + MVB(LN(x)).
class GL2SB {
 public:
  GL2SB() = default;
  GL2SB(const Gl2sbConfig& cfg, Rng& rng);

  ag::Var operator()(const ag::Var& x) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;
  /// Zeroes both branch outputs so the block reduces to s ⊙ x.
  void zero_branches();

  nn::ChannelLayerNorm norm;
  SS2D ss2d;
  MVB mvb;
  ag::Var skip_scale;  // (C)
};

/// y = x + Conv3x3(GL2SB_n(...GL2SB_1(x))).
class VSSG {
 public:
  VSSG() = default;
  VSSG(const Gl2sbConfig& cfg, int n_blocks, Rng& rng);

  ag::Var operator()(const ag::Var& x) const { return ag::add(x, body(x)); }
  /// The group without its outer skip connection.
  ag::Var body(const ag::Var& x) const;
  void collect(const std::string& prefix, nn::ParamList& out) const;

  std::vector<GL2SB> blocks;
  nn::Conv2d conv;
};

}  // namespace dpct::dv2sm

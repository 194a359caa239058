#pragma once

#include <string>
#include <vector>

#include "dpct/io/archive.hpp"
#include "dpct/nn/layers.hpp"

namespace dpct::trainer {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;

  void validate() const;
};

/// Bias-corrected Adam over a fixed, named parameter list.
class Adam {
 public:
  Adam(nn::ParamList params, const AdamConfig& cfg);

  /// Applies one update from the accumulated gradients (missing gradients count as zero).
  void step();
  void zero_grad();
  /// Rescales all gradients so their joint L2 norm is at most `max_norm`; returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  long long step_count() const { return t_; }
  const nn::ParamList& params() const { return params_; }
  const AdamConfig& config() const { return cfg_; }

  /// Moments stored as adam.m.<name> / adam.v.<name>, step count in meta["adam_step"].
  void save_state(io::Archive& ar) const;
  /// Throws LoadError on missing or mis-shaped moments.
  void load_state(const io::Archive& ar);

 private:
  nn::ParamList params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long long t_ = 0;
};

}  // namespace dpct::trainer

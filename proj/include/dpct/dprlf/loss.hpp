#pragma once

#include <array>
#include <memory>
#include <string>

#include "dpct/dprlf/vgg.hpp"

namespace dpct::dprlf {

enum class Band { Low = 0, Mid = 1, High = 2 };

/// Backbone block feeding each band: low = block 1, mid = block 3, high = block 5.
constexpr int band_block(Band b) { return b == Band::Low ? 1 : b == Band::Mid ? 3 : 5; }

struct LossWeights {
  double low = 0.35;
  double mid = 0.5;
  double high = 0.15;

  void validate() const;
  LossWeights scaled(double alpha) const { return {alpha * low, alpha * mid, alpha * high}; }
};

struct Bands {
  ag::Var low, mid, high;
  const ag::Var& operator[](Band b) const { return b == Band::Low ? low : b == Band::Mid ? mid : high; }
};

Bands extract_bands(const Vgg16& backbone, const ag::Var& image);

/// mean((φ_band(pred) - φ_band(gt))^2)
ag::Var band_loss(const Vgg16& backbone, const ag::Var& pred, const ag::Var& gt, Band band);

/// λ_low·L_low + λ_mid·L_mid + λ_high·L_high
double combine_bands(const std::array<double, 3>& band_losses, const LossWeights& w);

ag::Var dprlf(const Vgg16& backbone, const ag::Var& pred, const ag::Var& gt, const LossWeights& w = {});

ag::Var mse_loss(const ag::Var& pred, const ag::Var& gt);
ag::Var charbonnier_loss(const ag::Var& pred, const ag::Var& gt, double eps = 1e-3);

enum class LossArm { Mse, Charbonnier, Dprlf };
LossArm parse_loss_arm(const std::string& name);
std::string to_string(LossArm arm);

/// Training objective for one ablation arm, with an optional extra pixel-MSE term.
class Objective {
 public:
  Objective(LossArm arm, std::shared_ptr<const Vgg16> backbone, LossWeights weights = {}, double pixel_weight = 0.0,
            double charbonnier_eps = 1e-3);

  ag::Var operator()(const ag::Var& pred, const ag::Var& gt) const;
  LossArm arm() const { return arm_; }
  const Vgg16* backbone() const { return backbone_.get(); }

 private:
  LossArm arm_;
  std::shared_ptr<const Vgg16> backbone_;
  LossWeights weights_;
  double pixel_weight_;
  double eps_;
};

}  // namespace dpct::dprlf

#include "dpct/dprlf/loss.hpp"

#include <cmath>

namespace dpct::dprlf {

namespace {

void require_same_image_shape(const ag::Var& pred, const ag::Var& gt, const char* op) {
  require(pred && gt && pred.shape() == gt.shape(), std::string(op) + ": prediction and target shapes differ");
}

}  // namespace

void LossWeights::validate() const {
  require(low >= 0 && mid >= 0 && high >= 0, "dprlf: loss weights must be non-negative");
  require(std::isfinite(low) && std::isfinite(mid) && std::isfinite(high), "dprlf: loss weights must be finite");
}

Bands extract_bands(const Vgg16& backbone, const ag::Var& image) {
  const auto f = backbone.features(image, band_block(Band::High));
  return {f[band_block(Band::Low) - 1], f[band_block(Band::Mid) - 1], f[band_block(Band::High) - 1]};
}

ag::Var band_loss(const Vgg16& backbone, const ag::Var& pred, const ag::Var& gt, Band band) {
  require_same_image_shape(pred, gt, "band_loss");
  const int block = band_block(band);
  return ag::mse(backbone.features(pred, block)[block - 1], backbone.features(gt, block)[block - 1]);
}

double combine_bands(const std::array<double, 3>& l, const LossWeights& w) {
  w.validate();
  return w.low * l[0] + w.mid * l[1] + w.high * l[2];
}

ag::Var dprlf(const Vgg16& backbone, const ag::Var& pred, const ag::Var& gt, const LossWeights& w) {
  w.validate();
  require_same_image_shape(pred, gt, "dprlf");
  const Bands p = extract_bands(backbone, pred);
  Bands g;
  {
    // The target never needs a gradient unless the caller asked for one.
    std::unique_ptr<ag::NoGradGuard> guard;
    if (!gt.requires_grad()) guard = std::make_unique<ag::NoGradGuard>();
    g = extract_bands(backbone, gt);
  }
  return ag::add(ag::add(ag::scale(ag::mse(p.low, g.low), w.low), ag::scale(ag::mse(p.mid, g.mid), w.mid)),
                 ag::scale(ag::mse(p.high, g.high), w.high));
}

ag::Var mse_loss(const ag::Var& pred, const ag::Var& gt) {
  require_same_image_shape(pred, gt, "mse_loss");
  return ag::mse(pred, gt);
}

ag::Var charbonnier_loss(const ag::Var& pred, const ag::Var& gt, double eps) {
  require_same_image_shape(pred, gt, "charbonnier_loss");
  require(eps > 0, "charbonnier_loss: eps must be positive");
  return ag::charbonnier(pred, gt, eps);
}

LossArm parse_loss_arm(const std::string& name) {
  if (name == "mse") return LossArm::Mse;
  if (name == "charbonnier") return LossArm::Charbonnier;
  if (name == "dprlf") return LossArm::Dprlf;
  throw ArgumentError("unknown loss arm '" + name + "' (expected mse, charbonnier or dprlf)");
}

std::string to_string(LossArm arm) {
  switch (arm) {
    case LossArm::Mse: return "mse";
    case LossArm::Charbonnier: return "charbonnier";
    case LossArm::Dprlf: return "dprlf";
  }
  return "?";
}

Objective::Objective(LossArm arm, std::shared_ptr<const Vgg16> backbone, LossWeights weights, double pixel_weight,
                     double charbonnier_eps)
    : arm_(arm), backbone_(std::move(backbone)), weights_(weights), pixel_weight_(pixel_weight), eps_(charbonnier_eps) {
  weights_.validate();
  require(pixel_weight >= 0, "Objective: pixel weight must be non-negative");
  require(charbonnier_eps > 0, "Objective: charbonnier eps must be positive");
  require(arm != LossArm::Dprlf || backbone_ != nullptr, "Objective: the dprlf arm needs a backbone");
}

ag::Var Objective::operator()(const ag::Var& pred, const ag::Var& gt) const {
  ag::Var loss;
  switch (arm_) {
    case LossArm::Mse: loss = mse_loss(pred, gt); break;
    case LossArm::Charbonnier: loss = charbonnier_loss(pred, gt, eps_); break;
    case LossArm::Dprlf: loss = dprlf(*backbone_, pred, gt, weights_); break;
  }
  if (pixel_weight_ > 0) loss = ag::add(loss, ag::scale(mse_loss(pred, gt), pixel_weight_));
  return loss;
}

}  // namespace dpct::dprlf

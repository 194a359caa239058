#include "dpct/trainer/adam.hpp"

#include <cmath>

namespace dpct::trainer {

void AdamConfig::validate() const {
  require(learning_rate > 0 && std::isfinite(learning_rate), "Adam: learning rate must be positive");
  require(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1, "Adam: betas must lie in (0, 1)");
  require(eps > 0, "Adam: eps must be positive");
}

Adam::Adam(nn::ParamList params, const AdamConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  for (const auto& p : params_) {
    require(p.var.requires_grad(), "Adam: parameter '" + p.name + "' is not trainable");
    m_.emplace_back(p.var.numel(), 0.0);
    v_.emplace_back(p.var.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ag::Var& var = params_[i].var;
    auto& value = var.mutable_value();
    const auto grad = var.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      value[j] -= cfg_.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

double Adam::clip_grad_norm(double max_norm) {
  require(max_norm > 0, "clip_grad_norm: max norm must be positive");
  double sq = 0.0;
  for (const auto& p : params_)
    for (double g : p.var.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params_)
      if (!p.var.grad().empty())
        for (double& g : p.var.mutable_grad()) g *= s;
  }
  return norm;
}

void Adam::save_state(io::Archive& ar) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ar.tensors["adam.m." + params_[i].name] = {params_[i].var.shape(), m_[i]};
    ar.tensors["adam.v." + params_[i].name] = {params_[i].var.shape(), v_[i]};
  }
  ar.meta["adam_step"] = t_;
}

void Adam::load_state(const io::Archive& ar) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_[i].name;
    for (const char* prefix : {"adam.m.", "adam.v."}) {
      auto it = ar.tensors.find(prefix + name);
      if (it == ar.tensors.end()) throw LoadError("checkpoint: missing optimizer state '" + std::string(prefix) + name + "'");
      if (it->second.shape != params_[i].var.shape())
        throw LoadError("checkpoint: optimizer state '" + std::string(prefix) + name + "' has the wrong shape");
      (prefix[5] == 'm' ? m_[i] : v_[i]) = it->second.values;
    }
  }
  if (!ar.meta.contains("adam_step")) throw LoadError("checkpoint: missing optimizer step count");
  t_ = ar.meta["adam_step"].get<long long>();
}

}  // namespace dpct::trainer

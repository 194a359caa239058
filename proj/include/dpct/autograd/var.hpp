#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dpct/core/tensor.hpp"

namespace dpct::ag {

struct Node;
using BackwardFn = std::function<void(Node&)>;

/// One vertex of the reverse-mode tape. `grad` is allocated lazily.
struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  std::size_t numel() const noexcept { return value.size(); }
  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

/// Handle to a tape node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(std::vector<int> shape, std::vector<double> value);
  static Var leaf(std::vector<int> shape, std::vector<double> value, bool requires_grad);
  static Var from(const FeatureMap& fm, bool requires_grad = false);
  static Var from(const Image& img, bool requires_grad = false);
  static Var scalar(double v) { return constant({1}, {v}); }

  explicit operator bool() const noexcept { return static_cast<bool>(node_); }
  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& shared() const noexcept { return node_; }

  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> value() const { return node_->value; }
  std::vector<double>& mutable_value() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::vector<double>& mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }
  double item() const { return node_->value.at(0); }

  /// Copies a rank-3 value into a FeatureMap.
  FeatureMap to_feature_map() const;

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an op result; the backward closure is recorded only when gradient
/// tracking is on and at least one input requires a gradient.
Var make_result(std::vector<int> shape, std::vector<double> value, std::vector<Var> inputs, BackwardFn fn);

/// Accumulates d(root)/d(node) into every reachable node that requires a gradient.
/// `root` must hold a single element.
void backward(const Var& root);

bool grad_enabled() noexcept;

/// Disables tape recording for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

}  // namespace dpct::ag

#include "dpct/autograd/var.hpp"

#include <unordered_set>

namespace dpct::ag {

namespace {
thread_local bool g_grad_enabled = true;

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}
}  // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var Var::constant(std::vector<int> shape, std::vector<double> value) { return leaf(std::move(shape), std::move(value), false); }

Var Var::leaf(std::vector<int> shape, std::vector<double> value, bool requires_grad) {
  require(shape_numel(shape) == value.size(), "Var: shape does not match value count");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Var(std::move(n));
}

Var Var::from(const FeatureMap& fm, bool requires_grad) {
  return leaf({fm.channels(), fm.height(), fm.width()}, fm.data(), requires_grad);
}

Var Var::from(const Image& img, bool requires_grad) {
  return leaf({1, img.rows(), img.cols()}, img.data(), requires_grad);
}

FeatureMap Var::to_feature_map() const {
  require(rank() == 3, "Var::to_feature_map: rank must be 3");
  return FeatureMap(dim(0), dim(1), dim(2), node_->value);
}

Var make_result(std::vector<int> shape, std::vector<double> value, std::vector<Var> inputs, BackwardFn fn) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& in : inputs) any = any || (in && in.requires_grad());
    if (any) {
      n->requires_grad = true;
      n->inputs.reserve(inputs.size());
      for (auto& in : inputs) n->inputs.push_back(in.shared());
      n->backward = std::move(fn);
    }
  }
  return Var(std::move(n));
}

void backward(const Var& root) {
  require(root.numel() == 1, "backward: root must be a scalar");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) {
      n->ensure_grad();
      for (auto& in : n->inputs)
        if (in && in->requires_grad) in->ensure_grad();
      n->backward(*n);
    }
  }
}

}  // namespace dpct::ag

// SPDX-License-Identifier: Apache-2.0
#include "eadvc/nn/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "eadvc/common.hpp"

namespace eadvc::nn {

namespace detail {
std::int64_t next_serial() {
  static std::int64_t counter = 0;
  return ++counter;
}
}  // namespace detail

Tensor::Tensor(Mat value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->serial = detail::next_serial();
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Mat m(1, 1);
  m(0, 0) = v;
  return Tensor(std::move(m), requires_grad);
}

double Tensor::item() const {
  require(rows() == 1 && cols() == 1, Err::ShapeMismatch, "item() on non-scalar tensor");
  return node_->value(0, 0);
}

void Tensor::backward() {
  require(rows() == 1 && cols() == 1, Err::ShapeMismatch, "backward() from non-scalar");
  if (!node_->requires_grad) return;
  node_->grad = Mat::Ones(1, 1);
  node_->grad_set = true;

  // Collect the reachable differentiable subgraph, then run closures in
  // decreasing creation order (a valid reverse topological order because
  // parents are always created before children).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->serial > b->serial; });
  for (detail::Node* n : order) {
    if (n->backprop && n->grad_set) n->backprop(*n);
  }
}

Tensor make_op(Mat value, const std::vector<Tensor>& parents,
               std::function<void(detail::Node&)> bp) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  n->serial = detail::next_serial();
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.node()->requires_grad;
  n->requires_grad = rg;
  if (rg) {
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(bp);
  }
  return Tensor(n);
}

}  // namespace eadvc::nn

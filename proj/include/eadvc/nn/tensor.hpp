// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode autodiff over Eigen matrices. Graphs are built
// define-by-run; each op node stores its value and a closure that scatters
// the incoming gradient to its parents. Double precision throughout so the
// finite-difference gradient suite holds at 1e-4 relative error.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace eadvc::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace detail {

struct Node {
  Mat value;
  Mat grad;
  bool grad_set = false;
  bool requires_grad = false;
  std::int64_t serial = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grad. Empty for leaves and
  // constant subgraphs.
  std::function<void(Node&)> backprop;

  Mat& grad_ref() {
    if (!grad_set) {
      grad = Mat::Zero(value.rows(), value.cols());
      grad_set = true;
    }
    return grad;
  }
};

using NodePtr = std::shared_ptr<Node>;

std::int64_t next_serial();

inline void accumulate(const NodePtr& p, const Mat& g) {
  if (!p->requires_grad) return;
  if (!p->grad_set) {
    p->grad = g;
    p->grad_set = true;
  } else {
    p->grad += g;
  }
}

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Mat value, bool requires_grad = false);
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  // In-place value access for optimizer updates; never call on graph
  // interior nodes.
  Mat& raw_value() { return node_->value; }

  long rows() const { return node_->value.rows(); }
  long cols() const { return node_->value.cols(); }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return node_->grad_set; }
  const Mat& grad() const { return node_->grad; }
  void zero_grad() { node_->grad_set = false; }

  // Runs reverse-mode accumulation from this scalar node.
  void backward();

  const detail::NodePtr& node() const { return node_; }

 private:
  detail::NodePtr node_;
};

// Builds an op node. `bp` may be empty when the result is constant.
Tensor make_op(Mat value, const std::vector<Tensor>& parents,
               std::function<void(detail::Node&)> bp);

}  // namespace eadvc::nn

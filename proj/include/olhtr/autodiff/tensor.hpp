// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiable arrays.
//
// A Tensor is a cheap handle onto a shared Node. Nodes produced by kernels
// keep their parents alive together with a closure that pushes the node's
// gradient back into them; leaves (parameters, inputs) have no closure.
// Nodes are immutable once built, so the recorded graph is always acyclic.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace olhtr::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  // Empty until something is accumulated into it.
  std::vector<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  // Returns the gradient buffer, allocating zeros on first use.
  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T fill, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T v, bool requires_grad = false) { return from({1}, {v}, requires_grad); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  // Direct mutation is for leaves only (parameter updates, test probes).
  std::span<T> mutable_data() { return node_->value; }
  T operator[](std::size_t i) const { return node_->value[i]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zeros when no gradient has been accumulated.
  std::vector<T> grad() const;
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }
  bool is_leaf() const { return !node_->backward_fn; }
  const char* op() const { return node_->op; }

  // Seeds d(this)/d(this) = 1 and propagates through the recorded graph.
  // Gradients accumulate into whatever is already stored.
  void backward() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// While alive, kernels on this thread record no backward information.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// When enabled, every kernel rejects non-finite inputs.
void set_validation_mode(bool enabled);
bool validation_mode();

}  // namespace olhtr::ad

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "umri/core/errors.hpp"

namespace umri {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// One node of the dynamic computation graph. Nodes own their forward value;
// gradients live in a side table during backward (see GradMap), so evaluating
// independent graphs that share parameter nodes is safe across threads.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  // Accumulates into parent gradients. `grad` is this node's gradient;
  // `sink(i)` returns the (zero-initialized) gradient buffer of parents[i].
  std::function<void(const std::vector<T>& grad,
                     const std::function<std::vector<T>&(std::size_t)>& sink)>
      backward;
};

template <typename T>
using GradMap = std::unordered_map<const TensorNode<T>*, std::vector<T>>;

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode<T>> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<T> data) {
    check_sized(shape, data);
    auto n = std::make_shared<TensorNode<T>>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    return Tensor(std::move(n));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto n = std::make_shared<TensorNode<T>>();
    n->value.assign(shape_numel(shape), T(0));
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor param(Shape shape, std::vector<T> data) {
    check_sized(shape, data);
    auto n = std::make_shared<TensorNode<T>>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = true;
    return Tensor(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<T>& value() const { return node_->value; }
  std::vector<T>& value_mut() { return node_->value; }
  const T* data() const { return node_->value.data(); }

  TensorNode<T>* node() const { return node_.get(); }
  const std::shared_ptr<TensorNode<T>>& node_ptr() const { return node_; }

 private:
  static void check_sized(const Shape& shape, const std::vector<T>& data) {
    if (shape_numel(shape) != data.size())
      throw ShapeError("tensor: shape " + shape_str(shape) + " does not match data length " +
                       std::to_string(data.size()));
  }

  std::shared_ptr<TensorNode<T>> node_;
};

// Creates a non-leaf node. requires_grad is inherited from the parents.
template <typename T>
Tensor<T> make_op(const char* op, Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> parents,
                  std::function<void(const std::vector<T>&,
                                     const std::function<std::vector<T>&(std::size_t)>&)>
                      backward) {
  auto n = std::make_shared<TensorNode<T>>();
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(value);
  for (auto& p : parents) {
    n->requires_grad = n->requires_grad || p.requires_grad();
    n->parents.push_back(p.node_ptr());
  }
  if (n->requires_grad) n->backward = std::move(backward);
  return Tensor<T>(std::move(n));
}

// Reverse-mode sweep from a scalar loss. Returns gradients for every
// reachable leaf that requires grad; frozen tensors never appear.
template <typename T>
GradMap<T> backward(const Tensor<T>& loss);

}  // namespace umri

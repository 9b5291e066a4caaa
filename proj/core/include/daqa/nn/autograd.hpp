#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "daqa/nn/tensor.hpp"

namespace daqa::nn {

/// One recorded operation: its output value, accumulated gradient, inputs,
/// and the closure that pushes the output gradient back to the inputs.
template <class T>
struct Node {
  const char* op = "leaf";
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor<T>& ensure_grad() {
    if (grad.numel() != value.numel()) grad = Tensor<T>(value.shape());
    return grad;
  }
  bool has_grad() const { return grad.numel() == value.numel() && !value.empty(); }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
Var<T> constant(Tensor<T> value);
template <class T>
Var<T> parameter(Tensor<T> value);

/// Creates an op node; requires_grad is inherited from the inputs.
template <class T>
Var<T> make_node(const char* op, Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward);

/// Reverse-mode sweep from `root`. The root gradient is `seed` when given,
/// otherwise all ones. Nodes are visited once, in reverse topological order.
template <class T>
void backward(const Var<T>& root, const Tensor<T>* seed = nullptr);

/// Nodes reachable from `root`, inputs before consumers.
template <class T>
std::vector<Node<T>*> topological_order(const Var<T>& root);

/// Name of the first op (in evaluation order) whose output is non-finite, or "".
template <class T>
std::string first_non_finite(const Var<T>& root);

}  // namespace daqa::nn

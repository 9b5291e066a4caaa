#include "daqa/nn/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "daqa/common/error.hpp"

namespace daqa::nn {

template <class T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->op = "constant";
  n->value = std::move(value);
  return n;
}

template <class T>
Var<T> parameter(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->op = "parameter";
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

template <class T>
Var<T> make_node(const char* op, Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward) {
  auto n = std::make_shared<Node<T>>();
  n->op = op;
  n->value = std::move(value);
  for (const auto& in : inputs) n->requires_grad = n->requires_grad || (in && in->requires_grad);
  n->inputs = std::move(inputs);
  if (n->requires_grad) n->backward = std::move(backward);
  return n;
}

template <class T>
std::vector<Node<T>*> topological_order(const Var<T>& root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  // Iterative post-order DFS (deep LSTM unrolls would overflow recursion).
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

template <class T>
void backward(const Var<T>& root, const Tensor<T>* seed) {
  if (!root->requires_grad) return;
  auto& g = root->ensure_grad();
  if (seed) {
    if (seed->numel() != g.numel()) throw ShapeError("backward: seed shape does not match root");
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += (*seed)[i];
  } else {
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += T(1);
  }
  const auto order = topological_order(root);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && n->has_grad()) n->backward(*n);
  }
}

template <class T>
std::string first_non_finite(const Var<T>& root) {
  for (Node<T>* n : topological_order(root))
    for (std::size_t i = 0; i < n->value.numel(); ++i)
      if (!std::isfinite(n->value[i])) return n->op;
  return "";
}

#define DAQA_INSTANTIATE(T)                                                                                   \
  template Var<T> constant<T>(Tensor<T>);                                                                     \
  template Var<T> parameter<T>(Tensor<T>);                                                                    \
  template Var<T> make_node<T>(const char*, Tensor<T>, std::vector<Var<T>>, std::function<void(Node<T>&)>); \
  template void backward<T>(const Var<T>&, const Tensor<T>*);                                                 \
  template std::vector<Node<T>*> topological_order<T>(const Var<T>&);                                         \
  template std::string first_non_finite<T>(const Var<T>&);
DAQA_INSTANTIATE(float)
DAQA_INSTANTIATE(double)
#undef DAQA_INSTANTIATE

}  // namespace daqa::nn

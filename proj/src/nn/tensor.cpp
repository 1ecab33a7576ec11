#include "umri/nn/tensor.hpp"

#include <unordered_set>

namespace umri {

template <typename T>
GradMap<T> backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ShapeError("backward: loss must be a defined scalar tensor");
  if (!loss.requires_grad())
    throw ShapeError("backward: loss does not depend on any trainable tensor");

  // iterative post-order DFS over the requires_grad subgraph
  std::vector<TensorNode<T>*> order;
  std::unordered_set<const TensorNode<T>*> visited;
  std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  visited.insert(loss.node());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->parents.size()) {
      TensorNode<T>* p = top.first->parents[top.second].get();
      ++top.second;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(top.first);
      stack.pop_back();
    }
  }

  GradMap<T> grads;
  grads[loss.node()] = {T(1)};

  // reverse post-order: every consumer is handled before its operands, so a
  // node's gradient is complete by the time it is propagated
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* node = *it;
    auto found = grads.find(node);
    if (found == grads.end() || !node->backward) continue;
    const std::vector<T>& g = found->second;
    std::function<std::vector<T>&(std::size_t)> sink = [&](std::size_t i) -> std::vector<T>& {
      TensorNode<T>* parent = node->parents[i].get();
      auto [entry, inserted] = grads.try_emplace(parent);
      if (inserted) entry->second.assign(parent->value.size(), T(0));
      return entry->second;
    };
    node->backward(g, sink);
    if (!node->parents.empty()) grads.erase(node);  // keep memory bounded
  }

  // keep only trainable leaves
  for (auto it = grads.begin(); it != grads.end();) {
    if (!it->first->parents.empty() || !it->first->requires_grad) {
      it = grads.erase(it);
    } else {
      ++it;
    }
  }
  return grads;
}

template GradMap<float> backward<float>(const Tensor<float>&);
template GradMap<double> backward<double>(const Tensor<double>&);

}  // namespace umri

#pragma once

// Reverse-mode automatic differentiation over dense 4-D tensors.
//
// A Tensor is a shared handle to a graph node. Leaves are created with the
// factory functions; ops (ops.hpp) produce interior nodes that remember
// their parents and a backprop closure. Values are immutable once a tensor
// has entered a graph; only leaf values may be rewritten in place (that is
// how the optimizer updates parameters between steps). Gradients accumulate
// additively into leaves across backward() calls until zero_grad().

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rinr/shape.hpp"

namespace rinr {

// Deterministic uniform draw in [0,1) with 24-bit resolution. Used instead
// of std::uniform_real_distribution, whose output is implementation-defined.
inline double canonical_uniform(std::mt19937& rng) {
  return double(rng() >> 8) * (1.0 / 16777216.0);
}

template <typename T>
class Tensor {
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // allocated lazily
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads the node's grad (passed in) and accumulates into parent grads.
    std::function<void(std::span<const T>)> backprop;

    bool is_leaf() const { return !backprop; }
    void ensure_grad() {
      if (grad.empty()) grad.assign(value.size(), T(0));
    }
  };

 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(const Shape& s, bool requires_grad = false) {
    return from_data(s, std::vector<T>(check_numel(s), T(0)), requires_grad);
  }

  static Tensor full(const Shape& s, T v, bool requires_grad = false) {
    return from_data(s, std::vector<T>(check_numel(s), v), requires_grad);
  }

  static Tensor from_data(const Shape& s, std::vector<T> data,
                          bool requires_grad = false) {
    if (std::int64_t(data.size()) != check_numel(s)) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + s.str());
    }
    auto node = std::make_shared<Node>();
    node->shape = s;
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

  static Tensor uniform(const Shape& s, T lo, T hi, std::mt19937& rng,
                        bool requires_grad = false) {
    std::vector<T> data(check_numel(s));
    for (auto& v : data) v = T(lo + (hi - lo) * T(canonical_uniform(rng)));
    return from_data(s, std::move(data), requires_grad);
  }

  // Interior-node constructor used by ops. `backprop` receives the result
  // node's gradient and must accumulate (never assign) into parent grads.
  static Tensor make_result(const Shape& s, std::vector<T> value,
                            std::vector<Tensor> parents,
                            std::function<void(std::span<const T>)> backprop) {
    Tensor t = from_data(s, std::move(value), true);
    for (auto& p : parents) t.node_->parents.push_back(p.node_);
    t.node_->backprop = std::move(backprop);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node()->shape; }
  std::int64_t numel() const { return node()->shape.numel(); }
  bool requires_grad() const { return node()->requires_grad; }
  bool is_leaf() const { return node()->is_leaf(); }

  std::span<const T> value() const {
    return {node()->value.data(), node()->value.size()};
  }

  // In-place access to a leaf's values (initialization, optimizer steps).
  std::span<T> mutable_value() {
    if (!node()->is_leaf()) {
      throw std::logic_error("mutable_value: only leaf tensors may be mutated");
    }
    return {node()->value.data(), node()->value.size()};
  }

  std::span<const T> grad() const {
    return {node()->grad.data(), node()->grad.size()};
  }

  // Grad buffer, allocated (zeroed) on first use.
  std::span<T> mutable_grad() {
    node()->ensure_grad();
    return {node()->grad.data(), node()->grad.size()};
  }

  void set_requires_grad(bool rg) {
    if (!node()->is_leaf()) {
      throw std::logic_error("set_requires_grad: not a leaf");
    }
    node()->requires_grad = rg;
  }

  void zero_grad() {
    auto& g = node()->grad;
    std::fill(g.begin(), g.end(), T(0));
  }

  T item() const {
    if (numel() != 1) {
      throw ShapeError("item: tensor " + shape().str() + " is not scalar");
    }
    return node()->value[0];
  }

  // Backpropagate from a scalar. Interior grads are reset on every call;
  // leaf grads accumulate.
  void backward() {
    if (numel() != 1) {
      throw ShapeError("backward: loss must be scalar, got " + shape().str());
    }
    std::vector<Node*> topo;
    std::unordered_set<Node*> seen;
    topo_sort(node(), seen, topo);
    for (Node* nd : topo) {
      if (!nd->requires_grad) continue;
      nd->ensure_grad();
      if (!nd->is_leaf()) std::fill(nd->grad.begin(), nd->grad.end(), T(0));
    }
    node()->ensure_grad();
    node()->grad[0] += T(1);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      Node* nd = *it;
      if (nd->backprop) {
        nd->backprop(std::span<const T>(nd->grad.data(), nd->grad.size()));
      }
    }
  }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  static std::int64_t check_numel(const Shape& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw ShapeError("negative dimension in shape " + s.str());
    }
    return s.numel();
  }

  Node* node() const {
    if (!node_) throw std::logic_error("use of undefined tensor");
    return node_.get();
  }

  static void topo_sort(Node* nd, std::unordered_set<Node*>& seen,
                        std::vector<Node*>& out) {
    if (!nd->requires_grad || seen.count(nd)) return;
    seen.insert(nd);
    for (auto& p : nd->parents) topo_sort(p.get(), seen, out);
    out.push_back(nd);
  }

  std::shared_ptr<Node> node_;
};

}  // namespace rinr

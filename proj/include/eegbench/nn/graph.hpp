#pragma once

// Tape-based reverse-mode differentiation over Tensor-valued nodes.
//
// Nodes are appended in evaluation order, so the tape index order is a
// topological order and the backward sweep simply walks it in reverse.

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/nn/tensor.hpp"

namespace eegbench::nn {

// A trainable tensor owned by a model. `grad` accumulates across backward
// passes until the caller zeroes it.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool penalized = true;  // included in the L2 weight penalty (false for biases)

  void zero_grad() {
    if (grad.shape() != value.shape()) {
      grad = Tensor(value.shape());
    } else {
      grad.fill(0.0);
    }
  }
};

class Graph;

struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, int)>;

  // When not recording, ops skip saving backward state (inference).
  explicit Graph(bool recording = true) : recording_(recording) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.op = "constant";
    return push(std::move(n));
  }

  Var param(Parameter& p) {
    Node n;
    n.param = &p;
    n.requires_grad = recording_;
    n.op = "param:" + p.name;
    return push(std::move(n));
  }

  // Appends an op result. requires_grad is inherited from the parents.
  Var emit(std::string op, Tensor value, std::vector<int> parents, Backward backward) {
    Node n;
    n.op = std::move(op);
    n.value = std::move(value);
    n.parents = std::move(parents);
    if (recording_) {
      for (int p : n.parents) n.requires_grad = n.requires_grad || nodes_.at(p).requires_grad;
      if (n.requires_grad) n.backward = std::move(backward);
    }
    return push(std::move(n));
  }

  const Tensor& value(int id) const {
    const Node& n = nodes_.at(id);
    return n.param ? n.param->value : n.value;
  }
  const std::string& op(int id) const { return nodes_.at(id).op; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }

  // Gradient buffer of a node, allocated on first use. Parameter leaves
  // accumulate straight into Parameter::grad.
  Tensor& grad(int id) {
    Node& n = nodes_.at(id);
    if (n.param) {
      Parameter& p = *n.param;
      if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
      return p.grad;
    }
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }
  bool has_grad(int id) const { return !nodes_.at(id).grad.empty(); }

  // Accumulates d(loss)/d(parameter) into every Parameter::grad reachable from
  // `loss`. Intermediate gradients and saved backward state are released.
  void backward(Var loss) {
    if (loss.graph != this) throw ContractError("backward: loss belongs to another graph");
    const Tensor& lv = value(loss.id);
    if (lv.size() != 1) {
      throw ContractError("backward: loss must be scalar, got shape " + shape_str(lv.shape()));
    }
    if (!recording_) throw ContractError("backward: graph was built without recording");
    grad(loss.id)[0] = 1.0;
    last_loss_grad_ = grad(loss.id);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || n.param || n.grad.empty()) continue;
      if (n.backward) n.backward(*this, id);
      n.grad = Tensor();
      n.backward = nullptr;
    }
    for (auto& n : nodes_) {
      n.grad = Tensor();
      n.backward = nullptr;
    }
  }

  // Gradient the loss node held after the last backward pass (the scalar 1).
  const Tensor& loss_grad() const noexcept { return last_loss_grad_; }

  std::vector<Parameter*> parameters() const {
    std::vector<Parameter*> out;
    for (const auto& n : nodes_)
      if (n.param) out.push_back(n.param);
    return out;
  }

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  std::deque<Node> nodes_;
  Tensor last_loss_grad_;
  bool recording_;
};

inline const Tensor& Var::value() const { return graph->value(id); }

using GradientMap = std::map<std::string, Tensor>;

// Gradient of a scalar loss with respect to every parameter in its graph.
// Parameter::grad is reset first, so the returned values are exactly d(loss)/dp.
inline GradientMap backprop(Var loss) {
  Graph& g = *loss.graph;
  auto params = g.parameters();
  for (Parameter* p : params) p->zero_grad();
  g.backward(loss);
  GradientMap out;
  for (Parameter* p : params) out[p->name] = p->grad;
  return out;
}

}  // namespace eegbench::nn

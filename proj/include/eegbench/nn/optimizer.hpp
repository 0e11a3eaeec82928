#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/nn/graph.hpp"
#include "eegbench/nn/tensor.hpp"

namespace eegbench::nn {

enum class OptimizerKind { sgd, adam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline std::optional<OptimizerKind> parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  return std::nullopt;
}

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<Tensor> first_moment;   // adam only, one per parameter
  std::vector<Tensor> second_moment;
};

// One update of every parameter from its gradient. Lists must align 1:1.
inline void optimizer_step(OptimizerState& state, std::span<Tensor* const> params,
                           std::span<const Tensor* const> grads) {
  if (params.size() != grads.size()) {
    throw ContractError("optimizer_step: " + std::to_string(params.size()) + " parameters but " +
                        std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape()) {
      throw ContractError("optimizer_step: parameter " + std::to_string(i) + " has shape " +
                          shape_str(params[i]->shape()) + " but gradient " +
                          shape_str(grads[i]->shape()));
    }
  }
  if (!(state.learning_rate > 0.0)) throw ParameterError("optimizer_step: learning rate must be positive");
  ++state.step_count;
  const double lr = state.learning_rate;

  if (state.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& p = *params[i];
      const Tensor& g = *grads[i];
      for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
    }
    return;
  }

  if (state.first_moment.empty()) {
    for (Tensor* p : params) {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  } else if (state.first_moment.size() != params.size()) {
    throw ContractError("optimizer_step: parameter list changed between steps");
  }
  const double b1 = state.beta1, b2 = state.beta2;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

inline void optimizer_step(OptimizerState& state, std::span<Parameter* const> params) {
  std::vector<Tensor*> values;
  std::vector<const Tensor*> grads;
  for (Parameter* p : params) {
    if (p->grad.shape() != p->value.shape()) p->zero_grad();
    values.push_back(&p->value);
    grads.push_back(&p->grad);
  }
  optimizer_step(state, values, grads);
}

}  // namespace eegbench::nn

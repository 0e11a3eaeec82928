#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/models/spec.hpp"
#include "eegbench/nn/graph.hpp"
#include "eegbench/nn/init.hpp"
#include "eegbench/nn/ops.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::models {

using nn::Graph;
using nn::Mode;
using nn::Parameter;
using nn::Tensor;
using nn::Var;

// Parameters of a built ModelSpec plus the forward pass.
//
// Conv kernels are [filters x kernel x channels], dense weights [units x
// features], LSTM input and recurrent weights [4*units x features] and
// [4*units x units] with gate order (input, forget, cell, output).
class Network {
 public:
  Network() = default;

  Network(ModelSpec spec, Shape input_shape, std::uint64_t seed)
      : spec_(std::move(spec)), input_shape_(std::move(input_shape)) {
    trace_ = models::shape_trace(spec_, input_shape_);
    allocate();
    initialize(seed);
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<Shape>& shape_trace() const noexcept { return trace_; }
  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  // Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    Shape in = input_shape_;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      if (l.kind == LayerKind::conv1d) {
        Parameter& w = params_[first_[i]];
        nn::glorot_uniform(w.value, l.kernel * in[1], l.kernel * l.filters, rng);
        params_[first_[i] + 1].value.fill(0.0);
      } else if (l.kind == LayerKind::dense) {
        nn::glorot_uniform(params_[first_[i]].value, in[0], l.units, rng);
        params_[first_[i] + 1].value.fill(0.0);
      } else if (l.kind == LayerKind::lstm) {
        const std::size_t h = l.units;
        nn::glorot_uniform(params_[first_[i]].value, in[1], 4 * h, rng);
        nn::glorot_uniform(params_[first_[i] + 1].value, h, 4 * h, rng);
        Tensor& b = params_[first_[i] + 2].value;
        b.fill(0.0);
        for (std::size_t j = h; j < 2 * h; ++j) b[j] = 1.0;
      }
      in = trace_[i];
    }
  }

  // x is [batch x time x channels]; returns [batch x output_units]
  // probabilities, or the pre-sigmoid logits when `logits` is set.
  // Train mode needs one dropout seed per sample. `penalized` receives the
  // weight variables for the L2 term; `observed` the per-sample output
  // shape of every layer as actually computed.
  Var forward(Graph& g, Var x, Mode mode, std::span<const std::uint64_t> dropout_seeds = {},
              std::vector<Var>* penalized = nullptr, bool logits = false,
              std::vector<Shape>* observed = nullptr) {
    const Shape& xs = x.shape();
    if (xs.size() != 3 || xs[1] != input_shape_[0] || xs[2] != input_shape_[1]) {
      throw DimensionError(spec_.name + ": expected input [batch x " + std::to_string(input_shape_[0]) +
                           " x " + std::to_string(input_shape_[1]) + "], got " + nn::shape_str(xs));
    }
    Var h = x;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      switch (l.kind) {
        case LayerKind::input:
          break;
        case LayerKind::conv1d: {
          Var w = g.param(params_[first_[i]]);
          if (penalized) penalized->push_back(w);
          h = nn::conv1d(h, w, g.param(params_[first_[i] + 1]), l.stride);
          h = nn::activation(h, l.activation);
          break;
        }
        case LayerKind::dropout:
          h = nn::dropout(h, l.rate, mode, dropout_seeds, i);
          break;
        case LayerKind::maxpool1d:
          h = nn::maxpool1d(h, l.kernel, l.stride);
          break;
        case LayerKind::flatten:
          if (!flatten_is_layout_marker(spec_, i)) h = nn::flatten(h);
          break;
        case LayerKind::dense: {
          Var w = g.param(params_[first_[i]]);
          if (penalized) penalized->push_back(w);
          h = nn::dense(h, w, g.param(params_[first_[i] + 1]));
          const bool head = i + 1 == spec_.layers.size();
          if (!(head && logits && l.activation == Activation::sigmoid)) h = nn::activation(h, l.activation);
          break;
        }
        case LayerKind::lstm: {
          Var wx = g.param(params_[first_[i]]);
          Var wh = g.param(params_[first_[i] + 1]);
          if (penalized) {
            penalized->push_back(wx);
            penalized->push_back(wh);
          }
          h = nn::lstm(h, wx, wh, g.param(params_[first_[i] + 2]), l.return_sequence);
          break;
        }
      }
      if (observed) observed->emplace_back(h.shape().begin() + 1, h.shape().end());
    }
    return h;
  }

  // Eval-mode probabilities for a stacked batch [batch x time x channels].
  Tensor predict(const Tensor& batch) {
    Graph g(false);
    Var out = forward(g, g.constant(batch), Mode::eval);
    return out.value();
  }

 private:
  void add(std::string name, Shape shape, bool penalized) {
    Parameter p;
    p.name = std::move(name);
    p.value = Tensor(std::move(shape));
    p.penalized = penalized;
    params_.push_back(std::move(p));
  }

  void allocate() {
    params_.clear();
    first_.assign(spec_.layers.size(), 0);
    Shape in = input_shape_;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      const std::string prefix = "layer" + std::to_string(i) + "." + std::string(to_string(l.kind));
      first_[i] = params_.size();
      if (l.kind == LayerKind::conv1d) {
        add(prefix + ".kernel", {l.filters, l.kernel, in[1]}, true);
        add(prefix + ".bias", {l.filters}, false);
      } else if (l.kind == LayerKind::dense) {
        add(prefix + ".weight", {l.units, in[0]}, true);
        add(prefix + ".bias", {l.units}, false);
      } else if (l.kind == LayerKind::lstm) {
        add(prefix + ".input_weight", {4 * l.units, in[1]}, true);
        add(prefix + ".recurrent_weight", {4 * l.units, l.units}, true);
        add(prefix + ".bias", {4 * l.units}, false);
      }
      in = trace_[i];
    }
  }

  ModelSpec spec_;
  Shape input_shape_;
  std::vector<Shape> trace_;
  std::vector<Parameter> params_;
  std::vector<std::size_t> first_;
};

}  // namespace eegbench::models

#pragma once

// Differentiable layer ops on Graph variables, plus plain Tensor overloads for
// single-sample use.
//
// Sequence ops take [batch x time x channels] or a single [time x channels]
// sample; dense takes [batch x features] or a single [features] vector. The
// output keeps the batch convention of the input.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/nn/activation.hpp"
#include "eegbench/nn/graph.hpp"
#include "eegbench/nn/kernels.hpp"
#include "eegbench/nn/tensor.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::nn {

inline constexpr double kProbabilityClamp = 1e-7;

inline Var reshape(Var x, Shape shape) {
  Graph& g = *x.graph;
  Tensor y = x.value().reshaped(std::move(shape));
  return g.emit("reshape", std::move(y), {x.id}, [x](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad(x.id);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  });
}

// [batch x ...] -> [batch x prod(...)]
inline Var flatten(Var x) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw DimensionError("flatten: input needs a batch axis");
  return reshape(x, {s[0], shape_size(s) / s[0]});
}

inline Var conv1d(Var x, Var kernels, Var bias, std::size_t stride = 1) {
  if (x.shape().size() == 2) {
    const Shape s = x.shape();
    Var y = conv1d(reshape(x, {1, s[0], s[1]}), kernels, bias, stride);
    return reshape(y, {y.shape()[1], y.shape()[2]});
  }
  Graph& g = *x.graph;
  Tensor y = kernels::conv1d_forward(x.value(), kernels.value(), bias.value(), stride);
  return g.emit("conv1d", std::move(y), {x.id, kernels.id, bias.id},
                [x, kernels, bias, stride](Graph& g, int self) {
                  kernels::conv1d_backward(
                      g.value(x.id), g.value(kernels.id), stride, g.grad(self),
                      g.requires_grad(x.id) ? &g.grad(x.id) : nullptr,
                      g.requires_grad(kernels.id) ? &g.grad(kernels.id) : nullptr,
                      g.requires_grad(bias.id) ? &g.grad(bias.id) : nullptr);
                });
}

inline Var maxpool1d(Var x, std::size_t window, std::size_t stride = 1) {
  if (x.shape().size() == 2) {
    const Shape s = x.shape();
    Var y = maxpool1d(reshape(x, {1, s[0], s[1]}), window, stride);
    return reshape(y, {y.shape()[1], y.shape()[2]});
  }
  Graph& g = *x.graph;
  auto argmax = std::make_shared<std::vector<std::uint32_t>>();
  Tensor y = kernels::maxpool1d_forward(x.value(), window, stride, argmax.get());
  return g.emit("maxpool1d", std::move(y), {x.id}, [x, argmax](Graph& g, int self) {
    kernels::maxpool1d_backward(g.value(x.id).shape(), *argmax, g.grad(self), g.grad(x.id));
  });
}

inline Var dense(Var x, Var weights, Var bias) {
  if (x.shape().size() == 1) {
    Var y = dense(reshape(x, {1, x.shape()[0]}), weights, bias);
    return reshape(y, {y.shape()[1]});
  }
  Graph& g = *x.graph;
  Tensor y = kernels::dense_forward(x.value(), weights.value(), bias.value());
  return g.emit("dense", std::move(y), {x.id, weights.id, bias.id},
                [x, weights, bias](Graph& g, int self) {
                  kernels::dense_backward(
                      g.value(x.id), g.value(weights.id), g.grad(self),
                      g.requires_grad(x.id) ? &g.grad(x.id) : nullptr,
                      g.requires_grad(weights.id) ? &g.grad(weights.id) : nullptr,
                      g.requires_grad(bias.id) ? &g.grad(bias.id) : nullptr);
                });
}

inline Var activation(Var x, Activation kind) {
  if (kind == Activation::linear) return x;
  Graph& g = *x.graph;
  Tensor y(x.shape());
  kernels::activation_forward(kind, x.value().data(), y.data(), y.size());
  return g.emit(std::string("act:") + std::string(to_string(kind)), std::move(y), {x.id},
                [x, kind](Graph& g, int self) {
                  const Tensor& xv = g.value(x.id);
                  kernels::activation_backward(kind, xv.data(), g.value(self).data(),
                                               g.grad(self).data(), g.grad(x.id).data(), xv.size());
                });
}

inline void check_dropout_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

namespace detail {

inline Var apply_mask(Var x, std::shared_ptr<std::vector<double>> mask) {
  Graph& g = *x.graph;
  Tensor y(x.shape());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * (*mask)[i];
  return g.emit("dropout", std::move(y), {x.id}, [x, mask](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad(x.id);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * (*mask)[i];
  });
}

}  // namespace detail

// Inverted dropout. Eval mode (and rate 0) returns the input variable itself.
inline Var dropout(Var x, double rate, Mode mode, Rng& rng) {
  check_dropout_rate(rate);
  if (mode == Mode::eval || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.value().size());
  for (double& m : *mask) m = rng.uniform() >= rate ? keep_scale : 0.0;
  return detail::apply_mask(x, std::move(mask));
}

// Dropout whose mask for row b is drawn from Rng::derive(row_seeds[b], stream),
// so a sample's mask does not depend on which other rows share the batch.
inline Var dropout(Var x, double rate, Mode mode, std::span<const std::uint64_t> row_seeds,
                   std::uint64_t stream) {
  check_dropout_rate(rate);
  if (mode == Mode::eval || rate == 0.0) return x;
  if (x.shape().empty() || row_seeds.size() != x.shape()[0]) {
    throw DimensionError("dropout: " + std::to_string(row_seeds.size()) + " row seeds for input " +
                         shape_str(x.shape()));
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.value().size());
  const std::size_t per_row = mask->size() / row_seeds.size();
  for (std::size_t b = 0; b < row_seeds.size(); ++b) {
    Rng rng = Rng::derive(row_seeds[b], stream);
    for (std::size_t i = 0; i < per_row; ++i)
      (*mask)[b * per_row + i] = rng.uniform() >= rate ? keep_scale : 0.0;
  }
  return detail::apply_mask(x, std::move(mask));
}

inline Var lstm(Var x, Var input_weights, Var recurrent_weights, Var bias, bool return_sequence) {
  if (x.shape().size() == 2) {
    const Shape s = x.shape();
    Var y = lstm(reshape(x, {1, s[0], s[1]}), input_weights, recurrent_weights, bias,
                 return_sequence);
    const Shape& ys = y.shape();
    return return_sequence ? reshape(y, {ys[1], ys[2]}) : reshape(y, {ys[1]});
  }
  Graph& g = *x.graph;
  auto cache = g.recording() ? std::make_shared<kernels::LstmCache>() : nullptr;
  Tensor y = kernels::lstm_forward(x.value(), input_weights.value(), recurrent_weights.value(),
                                   bias.value(), return_sequence, cache.get());
  return g.emit(
      "lstm", std::move(y), {x.id, input_weights.id, recurrent_weights.id, bias.id},
      [x, input_weights, recurrent_weights, bias, return_sequence, cache](Graph& g, int self) {
        kernels::lstm_backward(
            *cache, g.value(input_weights.id), g.value(recurrent_weights.id), return_sequence,
            g.grad(self), g.requires_grad(x.id) ? &g.grad(x.id) : nullptr,
            g.requires_grad(input_weights.id) ? &g.grad(input_weights.id) : nullptr,
            g.requires_grad(recurrent_weights.id) ? &g.grad(recurrent_weights.id) : nullptr,
            g.requires_grad(bias.id) ? &g.grad(bias.id) : nullptr);
        *cache = kernels::LstmCache{};
      });
}

inline Var scale(Var x, double factor) {
  Graph& g = *x.graph;
  Tensor y = x.value();
  for (double& v : y.storage()) v *= factor;
  return g.emit("scale", std::move(y), {x.id}, [x, factor](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad(x.id);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * dy[i];
  });
}

// Elementwise a + b for equal shapes.
inline Var add(Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " differ");
  }
  Graph& g = *a.graph;
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return g.emit("add", std::move(y), {a.id, b.id}, [a, b](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    for (Var v : {a, b}) {
      if (!g.requires_grad(v.id)) continue;
      Tensor& dv = g.grad(v.id);
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += dy[i];
    }
  });
}

// sum(w * x): reduces any output to a scalar probe for gradient checks.
inline Var weighted_sum(Var x, Tensor weights) {
  if (weights.size() != x.value().size()) {
    throw DimensionError("weighted_sum: weights " + shape_str(weights.shape()) +
                         " do not match input " + shape_str(x.shape()));
  }
  Graph& g = *x.graph;
  double s = 0.0;
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) s += weights[i] * xv[i];
  auto w = std::make_shared<Tensor>(std::move(weights));
  return g.emit("weighted_sum", Tensor::scalar(s), {x.id}, [x, w](Graph& g, int self) {
    const double dy = g.grad(self)[0];
    Tensor& dx = g.grad(x.id);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy * (*w)[i];
  });
}

// coeff * sum ||W||^2 over the given variables.
inline Var l2_penalty(std::span<const Var> weights, double coeff, Graph& g) {
  double s = 0.0;
  std::vector<int> parents;
  for (const Var& w : weights) {
    s += w.value().squared_norm();
    parents.push_back(w.id);
  }
  std::vector<Var> ws(weights.begin(), weights.end());
  return g.emit("l2_penalty", Tensor::scalar(coeff * s), std::move(parents),
                [ws, coeff](Graph& g, int self) {
                  const double dy = g.grad(self)[0];
                  for (const Var& w : ws) {
                    if (!g.requires_grad(w.id)) continue;
                    const Tensor& wv = g.value(w.id);
                    Tensor& dw = g.grad(w.id);
                    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += 2.0 * coeff * dy * wv[i];
                  }
                });
}

inline void check_binary_targets(const Tensor& target) {
  for (double t : target.values()) {
    if (t != 0.0 && t != 1.0) {
      throw DataError("bce_loss: targets must be 0 or 1, got " + std::to_string(t));
    }
  }
}

// Mean binary cross-entropy over all outputs plus coeff * sum ||W||^2.
// Probabilities are clamped to [eps, 1 - eps]; the clamped region has zero slope.
inline Var bce_loss(Var pred, const Tensor& target, std::span<const Var> penalized = {},
                    double l2_coeff = 0.0) {
  const Tensor& p = pred.value();
  if (p.size() != target.size()) {
    throw DimensionError("bce_loss: prediction " + shape_str(p.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  if (l2_coeff < 0.0) throw ParameterError("bce_loss: l2 coefficient must be non-negative");
  check_binary_targets(target);
  Graph& g = *pred.graph;
  const double n = static_cast<double>(p.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(p[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    loss -= target[i] * std::log(pc) + (1.0 - target[i]) * std::log(1.0 - pc);
  }
  loss /= n;
  auto t = std::make_shared<Tensor>(target);
  Var data = g.emit("bce", Tensor::scalar(loss), {pred.id}, [pred, t, n](Graph& g, int self) {
    const double dy = g.grad(self)[0];
    const Tensor& pv = g.value(pred.id);
    Tensor& dp = g.grad(pred.id);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double q = pv[i];
      if (q < kProbabilityClamp || q > 1.0 - kProbabilityClamp) continue;
      dp[i] += dy * (q - (*t)[i]) / (q * (1.0 - q)) / n;
    }
  });
  if (penalized.empty() || l2_coeff == 0.0) return data;
  Var pen = l2_penalty(penalized, l2_coeff, g);
  const double total = data.value()[0] + pen.value()[0];
  return g.emit("add", Tensor::scalar(total), {data.id, pen.id}, [data, pen](Graph& g, int self) {
    const double dy = g.grad(self)[0];
    if (g.requires_grad(data.id)) g.grad(data.id)[0] += dy;
    if (g.requires_grad(pen.id)) g.grad(pen.id)[0] += dy;
  });
}

// Mean BCE of sigmoid(logits). The reported value uses the same clamp as
// bce_loss; the gradient is (sigmoid(z) - t) / n everywhere, so saturated
// outputs still receive a training signal.
inline Var bce_with_logits(Var logits, const Tensor& target) {
  const Tensor& z = logits.value();
  if (z.size() != target.size()) {
    throw DimensionError("bce_with_logits: logits " + shape_str(z.shape()) + " vs target " +
                         shape_str(target.shape()));
  }
  check_binary_targets(target);
  Graph& g = *logits.graph;
  const double n = static_cast<double>(z.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double pc = std::clamp(sigmoid(z[i]), kProbabilityClamp, 1.0 - kProbabilityClamp);
    loss -= target[i] * std::log(pc) + (1.0 - target[i]) * std::log(1.0 - pc);
  }
  auto t = std::make_shared<Tensor>(target);
  return g.emit("bce_logits", Tensor::scalar(loss / n), {logits.id}, [logits, t, n](Graph& g, int self) {
    const double dy = g.grad(self)[0];
    const Tensor& zv = g.value(logits.id);
    Tensor& dz = g.grad(logits.id);
    for (std::size_t i = 0; i < zv.size(); ++i) dz[i] += dy * (sigmoid(zv[i]) - (*t)[i]) / n;
  });
}

// ---------------------------------------------------------------------------
// Plain tensor forms.

struct LstmParams {
  std::size_t units = 0;
  Tensor input_weights;      // [4*units x features]
  Tensor recurrent_weights;  // [4*units x units]
  Tensor biases;             // [4*units], gate order (input, forget, cell, output)
};

inline Tensor conv1d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                     std::size_t stride = 1) {
  if (input.rank() == 2) {
    Tensor y = kernels::conv1d_forward(input.reshaped({1, input.dim(0), input.dim(1)}), kernels,
                                       bias, stride);
    return std::move(y).reshaped({y.dim(1), y.dim(2)});
  }
  return kernels::conv1d_forward(input, kernels, bias, stride);
}

inline Tensor maxpool1d(const Tensor& input, std::size_t window, std::size_t stride = 1) {
  if (input.rank() == 2) {
    Tensor y = kernels::maxpool1d_forward(input.reshaped({1, input.dim(0), input.dim(1)}), window,
                                          stride, nullptr);
    return std::move(y).reshaped({y.dim(1), y.dim(2)});
  }
  return kernels::maxpool1d_forward(input, window, stride, nullptr);
}

inline Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() == 1) {
    Tensor y = kernels::dense_forward(input.reshaped({1, input.dim(0)}), weights, bias);
    return std::move(y).reshaped({y.dim(1)});
  }
  return kernels::dense_forward(input, weights, bias);
}

inline Tensor activation(const Tensor& x, Activation kind) {
  Tensor y(x.shape());
  kernels::activation_forward(kind, x.data(), y.data(), y.size());
  return y;
}

inline Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng) {
  Graph g(false);
  return dropout(g.constant(x), rate, mode, rng).value();
}

inline Tensor lstm_forward(const Tensor& seq, const LstmParams& params, bool return_sequence) {
  if (params.recurrent_weights.rank() != 2 || params.recurrent_weights.dim(1) != params.units) {
    throw DimensionError("lstm: recurrent weights do not match units");
  }
  if (seq.rank() == 2) {
    if (seq.dim(0) == 0) throw ParameterError("lstm: empty sequence");
    Tensor y = kernels::lstm_forward(seq.reshaped({1, seq.dim(0), seq.dim(1)}),
                                     params.input_weights, params.recurrent_weights, params.biases,
                                     return_sequence, nullptr);
    return return_sequence ? std::move(y).reshaped({y.dim(1), y.dim(2)})
                           : std::move(y).reshaped({y.dim(1)});
  }
  return kernels::lstm_forward(seq, params.input_weights, params.recurrent_weights, params.biases,
                               return_sequence, nullptr);
}

inline double bce_loss(const Tensor& pred, const Tensor& target,
                       std::span<const Tensor> penalized = {}, double l2_coeff = 0.0) {
  Graph g(false);
  std::vector<Var> ws;
  for (const Tensor& w : penalized) ws.push_back(g.constant(w));
  return bce_loss(g.constant(pred), target, ws, l2_coeff).value()[0];
}

}  // namespace eegbench::nn

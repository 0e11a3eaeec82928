#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/nn/activation.hpp"
#include "eegbench/nn/kernels.hpp"
#include "eegbench/nn/tensor.hpp"

namespace eegbench::models {

using nn::Activation;
using nn::Shape;

enum class LayerKind { input, conv1d, dropout, maxpool1d, flatten, dense, lstm };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::input: return "input";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::dropout: return "dropout";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::lstm: return "lstm";
  }
  return "?";
}

inline std::optional<LayerKind> parse_layer_kind(std::string_view s) {
  for (auto k : {LayerKind::input, LayerKind::conv1d, LayerKind::dropout, LayerKind::maxpool1d,
                 LayerKind::flatten, LayerKind::dense, LayerKind::lstm})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// One row of an architecture table. Only the fields of the declared kind are
// meaningful; the rest stay zero.
struct LayerSpec {
  LayerKind kind = LayerKind::input;
  std::size_t filters = 0;  // conv1d
  std::size_t kernel = 0;   // conv1d kernel, maxpool window, lstm kernel column
  std::size_t stride = 0;   // conv1d, maxpool1d
  double rate = 0.0;        // dropout
  std::size_t units = 0;    // dense, lstm
  Activation activation = Activation::linear;
  bool variable = false;  // activation follows the model-wide choice
  bool return_sequence = false;

  static LayerSpec input() { return {}; }
  static LayerSpec conv(std::size_t filters, std::size_t kernel, std::size_t stride, Activation a) {
    LayerSpec l;
    l.kind = LayerKind::conv1d;
    l.filters = filters;
    l.kernel = kernel;
    l.stride = stride;
    l.activation = a;
    l.variable = true;
    return l;
  }
  static LayerSpec dropout(double rate) {
    LayerSpec l;
    l.kind = LayerKind::dropout;
    l.rate = rate;
    return l;
  }
  static LayerSpec maxpool(std::size_t window, std::size_t stride) {
    LayerSpec l;
    l.kind = LayerKind::maxpool1d;
    l.kernel = window;
    l.stride = stride;
    return l;
  }
  static LayerSpec flatten() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    return l;
  }
  static LayerSpec dense(std::size_t units, Activation a) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.units = units;
    l.activation = a;
    return l;
  }
  static LayerSpec lstm(std::size_t units, bool return_sequence = false) {
    LayerSpec l;
    l.kind = LayerKind::lstm;
    l.units = units;
    l.kernel = 1;
    l.return_sequence = return_sequence;
    return l;
  }

  bool has_parameters() const {
    return kind == LayerKind::conv1d || kind == LayerKind::dense || kind == LayerKind::lstm;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Family { cnn, lstm, cnn_lstm };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::cnn: return "CNN";
    case Family::lstm: return "LSTM";
    case Family::cnn_lstm: return "CNN-LSTM";
  }
  return "?";
}

inline constexpr std::array<std::string_view, 7> kModelNames = {
    "CNN-1", "CNN-2", "CNN-3", "LSTM-1", "LSTM-2", "CNN-LSTM-1", "CNN-LSTM-2"};

inline bool is_model_name(std::string_view s) {
  for (auto n : kModelNames)
    if (n == s) return true;
  return false;
}

struct ModelSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  Activation activation = Activation::relu;
  double l2_coeff = 0.01;

  Family family() const {
    if (name.starts_with("CNN-LSTM")) return Family::cnn_lstm;
    if (name.starts_with("LSTM")) return Family::lstm;
    return Family::cnn;
  }
  std::size_t output_units() const { return layers.back().units; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline void check_hidden_activation(Activation a) {
  if (a != Activation::relu && a != Activation::leaky_relu && a != Activation::selu) {
    throw ParameterError("build: hidden activation must be relu, leaky_relu or selu, got " +
                         std::string(nn::to_string(a)));
  }
}

// The architecture tables. Conv rows take the model-wide activation; dense
// rows keep the activation printed in the table (blank means linear).
inline ModelSpec build(std::string_view name, Activation activation) {
  check_hidden_activation(activation);
  using L = LayerSpec;
  const auto conv = [&] { return L::conv(64, 3, 1, activation); };
  ModelSpec m;
  m.name = std::string(name);
  m.activation = activation;
  auto& v = m.layers;
  if (name == "CNN-1") {
    v = {L::input(), conv(), conv(), L::dropout(0.25), L::maxpool(2, 1), L::flatten(),
         L::dense(100, Activation::linear), L::dropout(0.25), L::dense(2, Activation::sigmoid)};
  } else if (name == "CNN-2") {
    v = {L::input(),        conv(),           L::dropout(0.5),
         conv(),            L::dropout(0.5),  conv(),
         L::dropout(0.5),   L::maxpool(2, 1), L::flatten(),
         L::dense(100, Activation::relu), L::dropout(0.25), L::dense(1, Activation::sigmoid)};
  } else if (name == "CNN-3") {
    v = {L::input(),       conv(),           conv(),
         L::dropout(0.5),  L::maxpool(2, 1), L::flatten(),
         L::dense(100, Activation::relu),    L::dropout(0.25),
         L::dense(50, Activation::relu),     L::dropout(0.25),
         L::dense(1, Activation::sigmoid)};
  } else if (name == "LSTM-1") {
    v = {L::input(), L::lstm(100), L::dropout(0.5), L::dense(100, Activation::relu),
         L::dropout(0.25), L::dense(1, Activation::sigmoid)};
  } else if (name == "LSTM-2") {
    v = {L::input(), L::lstm(100, true), L::lstm(50), L::dropout(0.5),
         L::dense(100, Activation::relu), L::dropout(0.25), L::dense(1, Activation::sigmoid)};
  } else if (name == "CNN-LSTM-1" || name == "CNN-LSTM-2") {
    v = {L::input(),       conv(),          conv(),          L::dropout(0.5),
         L::maxpool(2, 1), L::flatten(),    L::lstm(100),    L::dropout(0.5),
         L::dense(100, Activation::linear), L::dropout(0.25)};
    if (name == "CNN-LSTM-2") {
      v.push_back(L::dense(50, Activation::relu));
      v.push_back(L::dropout(0.25));
    }
    v.push_back(L::dense(1, Activation::sigmoid));
  } else {
    throw ParameterError("build: unknown model '" + std::string(name) + "'");
  }
  return m;
}

// A flatten row directly ahead of an LSTM keeps the [time x features] layout:
// the recurrent layer consumes the pooled conv features as a sequence.
inline bool flatten_is_layout_marker(const ModelSpec& m, std::size_t i) {
  return m.layers[i].kind == LayerKind::flatten && i + 1 < m.layers.size() &&
         m.layers[i + 1].kind == LayerKind::lstm;
}

// Per-sample output shape after every layer (index 0 is the input row).
inline std::vector<Shape> shape_trace(const ModelSpec& m, const Shape& input) {
  std::vector<Shape> out;
  Shape s = input;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& l = m.layers[i];
    const std::string where = m.name + " layer " + std::to_string(i) + " (" +
                              std::string(to_string(l.kind)) + ")";
    auto need_rank = [&](std::size_t r) {
      if (s.size() != r) {
        throw DimensionError(where + ": expected rank-" + std::to_string(r) + " input, got " +
                             nn::shape_str(s));
      }
    };
    switch (l.kind) {
      case LayerKind::input:
      case LayerKind::dropout:
        break;
      case LayerKind::conv1d: {
        need_rank(2);
        if (s[0] < l.kernel) {
          throw DimensionError(where + ": time axis " + std::to_string(s[0]) +
                               " shorter than kernel " + std::to_string(l.kernel));
        }
        s = {(s[0] - l.kernel) / l.stride + 1, l.filters};
        break;
      }
      case LayerKind::maxpool1d:
        need_rank(2);
        if (s[0] < l.kernel) {
          throw DimensionError(where + ": time axis " + std::to_string(s[0]) +
                               " shorter than window " + std::to_string(l.kernel));
        }
        s = {nn::kernels::pooled_length(s[0], l.kernel, l.stride), s[1]};
        break;
      case LayerKind::flatten:
        if (!flatten_is_layout_marker(m, i)) s = {nn::shape_size(s)};
        break;
      case LayerKind::dense:
        need_rank(1);
        s = {l.units};
        break;
      case LayerKind::lstm:
        need_rank(2);
        if (s[0] == 0) throw DimensionError(where + ": empty sequence");
        s = l.return_sequence ? Shape{s[0], l.units} : Shape{l.units};
        break;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace eegbench::models

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "eegbench/errors.hpp"

namespace eegbench::nn {

enum class Activation { linear, relu, leaky_relu, selu, sigmoid };

enum class Mode { train, eval };

inline constexpr double kLeakyReluSlope = 0.01;
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::selu: return "selu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "selu") return Activation::selu;
  if (s == "sigmoid") return Activation::sigmoid;
  return std::nullopt;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? x : kLeakyReluSlope * x;
    case Activation::selu:
      return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
    case Activation::sigmoid: return sigmoid(x);
  }
  return x;
}

// Derivative expressed through the input x and the output y = activate(x).
inline double activate_derivative(Activation kind, double x, double y) {
  switch (kind) {
    case Activation::linear: return 1.0;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? 1.0 : kLeakyReluSlope;
    case Activation::selu:
      return x > 0.0 ? kSeluLambda : y + kSeluLambda * kSeluAlpha;
    case Activation::sigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

}  // namespace eegbench::nn

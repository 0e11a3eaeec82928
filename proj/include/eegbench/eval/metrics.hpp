#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"

namespace eegbench::eval {

using data::Label;

// SZ is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(const std::vector<Label>& preds, const std::vector<Label>& truth) {
  if (preds.size() != truth.size()) {
    throw DimensionError("confusion: " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Label::SZ, t = truth[i] == Label::SZ;
    if (p && t) ++cm.tp;
    else if (p) ++cm.fp;
    else if (t) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

// A ratio whose denominator is zero is reported as 0 and flagged.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

inline Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  }
  return m;
}

}  // namespace eegbench::eval

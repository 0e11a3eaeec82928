#pragma once

#include <string>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/nn/tensor.hpp"

namespace eegbench::baselines {

using data::Label;
using nn::Tensor;

// Non-owning view of labelled feature vectors. A frame's row-major data is
// already its time-major flattened vector, so rows point straight into frames.
struct Samples {
  std::vector<const double*> rows;
  std::vector<Label> labels;
  std::size_t dim = 0;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  double operator()(std::size_t i, std::size_t j) const { return rows[i][j]; }
};

inline Samples samples_from_frames(const data::FrameRefs& frames) {
  Samples s;
  for (const data::Frame* f : frames) {
    if (s.rows.empty()) {
      s.dim = f->data.size();
    } else if (f->data.size() != s.dim) {
      throw DimensionError("baselines: frame '" + f->subject_id + "' has " + std::to_string(f->data.size()) +
                           " values, expected " + std::to_string(s.dim));
    }
    s.rows.push_back(f->data.data());
    s.labels.push_back(f->label);
  }
  return s;
}

// Rows of an [n x d] matrix.
inline Samples samples_from_matrix(const Tensor& x, std::vector<Label> labels = {}) {
  if (x.rank() != 2) throw DimensionError("baselines: expected an [n x d] matrix, got " + nn::shape_str(x.shape()));
  if (!labels.empty() && labels.size() != x.dim(0))
    throw DimensionError("baselines: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(x.dim(0)) + " rows");
  Samples s;
  s.dim = x.dim(1);
  for (std::size_t i = 0; i < x.dim(0); ++i) s.rows.push_back(x.data() + i * s.dim);
  s.labels = std::move(labels);
  return s;
}

inline Samples subset(const Samples& s, const std::vector<std::size_t>& idx) {
  Samples out;
  out.dim = s.dim;
  for (auto i : idx) {
    out.rows.push_back(s.rows.at(i));
    if (!s.labels.empty()) out.labels.push_back(s.labels[i]);
  }
  return out;
}

inline void require_training_set(const Samples& s, const char* who) {
  if (s.empty()) throw DataError(std::string(who) + ": empty training set");
  if (s.labels.size() != s.size()) throw DataError(std::string(who) + ": training rows need labels");
  if (s.dim == 0) throw DataError(std::string(who) + ": zero-length feature vectors");
}

inline void require_two_classes(const Samples& s, const char* who) {
  bool sz = false, hc = false;
  for (Label l : s.labels) (l == Label::SZ ? sz : hc) = true;
  if (!sz || !hc) throw DataError(std::string(who) + ": training set has a single class");
}

inline void require_dim(const Samples& s, std::size_t dim, const char* who) {
  if (s.dim != dim)
    throw DimensionError(std::string(who) + ": query dimension " + std::to_string(s.dim) + ", fitted on " +
                         std::to_string(dim));
}

inline int class_index(Label l) { return l == Label::SZ ? 0 : 1; }

}  // namespace eegbench::baselines

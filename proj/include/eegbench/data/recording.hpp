#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/nn/tensor.hpp"

namespace eegbench::data {

using nn::Tensor;

// SZ is the positive class throughout.
enum class Label { SZ, HC };

inline std::string_view to_string(Label l) { return l == Label::SZ ? "SZ" : "HC"; }

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "SZ") return Label::SZ;
  if (s == "HC") return Label::HC;
  return std::nullopt;
}

// Network target: 1 for SZ, 0 for HC.
inline double target_value(Label l) { return l == Label::SZ ? 1.0 : 0.0; }

enum class Normalization { raw, zscore, zscore_l2 };

inline std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::raw: return "raw";
    case Normalization::zscore: return "zscore";
    case Normalization::zscore_l2: return "zscore_l2";
  }
  return "?";
}

inline std::optional<Normalization> parse_normalization(std::string_view s) {
  if (s == "raw") return Normalization::raw;
  if (s == "zscore") return Normalization::zscore;
  if (s == "zscore_l2") return Normalization::zscore_l2;
  return std::nullopt;
}

inline constexpr std::size_t kChannelCount = 19;
inline constexpr std::size_t kFrameLength = 6250;  // 25 s at 250 Hz
inline constexpr double kSampleRateHz = 250.0;

// 10-20 electrode order of the reference recordings.
inline constexpr std::array<std::string_view, kChannelCount> kMontage = {
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
    "C4",  "T4",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2"};

inline std::vector<std::string> montage_names() {
  return {kMontage.begin(), kMontage.end()};
}

// One subject's continuous multichannel signal in microvolts.
struct RawRecording {
  std::string subject_id;
  Label label = Label::HC;
  double sample_rate_hz = kSampleRateHz;
  std::vector<std::string> channel_names;
  Tensor samples;  // [n_samples x channels]

  std::size_t sample_count() const { return samples.rank() == 2 ? samples.dim(0) : 0; }
  std::size_t channel_count() const { return samples.rank() == 2 ? samples.dim(1) : 0; }
};

// A fixed-length segment of one recording; the unit of classification.
struct Frame {
  std::string subject_id;
  Label label = Label::HC;
  Tensor data;  // [frame_len x channels]
  std::size_t frame_index = 0;
  Normalization normalization = Normalization::raw;

  std::size_t length() const { return data.dim(0); }
  std::size_t channels() const { return data.dim(1); }
};

struct ClassCounts {
  std::size_t sz = 0;
  std::size_t hc = 0;

  std::size_t total() const { return sz + hc; }
  std::size_t of(Label l) const { return l == Label::SZ ? sz : hc; }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// Non-owning selection of frames; used for fold partitions.
using FrameRefs = std::vector<const Frame*>;

struct FrameSet {
  std::vector<Frame> frames;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  const Frame& operator[](std::size_t i) const { return frames[i]; }

  ClassCounts class_counts() const {
    ClassCounts c;
    for (const auto& f : frames) (f.label == Label::SZ ? c.sz : c.hc) += 1;
    return c;
  }

  std::vector<Label> labels() const {
    std::vector<Label> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f.label);
    return out;
  }

  FrameRefs refs() const {
    FrameRefs out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(&f);
    return out;
  }

  FrameRefs refs(const std::vector<std::size_t>& indices) const {
    FrameRefs out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(&frames.at(i));
    return out;
  }

  FrameSet subset(const std::vector<std::size_t>& indices) const {
    FrameSet out;
    out.frames.reserve(indices.size());
    for (std::size_t i : indices) out.frames.push_back(frames.at(i));
    return out;
  }
};

inline ClassCounts class_counts(const FrameRefs& frames) {
  ClassCounts c;
  for (const Frame* f : frames) (f->label == Label::SZ ? c.sz : c.hc) += 1;
  return c;
}

}  // namespace eegbench::data

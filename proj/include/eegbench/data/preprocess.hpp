#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/log.hpp"

namespace eegbench::data {

// Consecutive non-overlapping frames; the trailing partial frame is dropped.
inline std::vector<Frame> segment(const RawRecording& rec, std::int64_t frame_len = kFrameLength) {
  if (frame_len <= 0) throw ParameterError("segment: frame length must be positive");
  const auto len = static_cast<std::size_t>(frame_len);
  const std::size_t n = rec.sample_count(), ch = rec.channel_count();
  if (n < len) {
    throw DataError("segment: recording '" + rec.subject_id + "' has " + std::to_string(n) +
                    " samples, fewer than one frame of " + std::to_string(len));
  }
  std::vector<Frame> frames;
  frames.reserve(n / len);
  for (std::size_t f = 0; f < n / len; ++f) {
    const double* begin = rec.samples.data() + f * len * ch;
    frames.push_back(Frame{rec.subject_id, rec.label,
                           Tensor({len, ch}, std::vector<double>(begin, begin + len * ch)), f,
                           Normalization::raw});
  }
  return frames;
}

// Per-channel standardization with population sigma. Returns the indices of
// constant channels, which are set to zero.
inline std::vector<std::size_t> zscore_channels(Tensor& x) {
  const std::size_t n = x.dim(0), ch = x.dim(1);
  std::vector<std::size_t> constant;
  for (std::size_t c = 0; c < ch; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += x.at(t, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double d = x.at(t, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (!(sd > 0.0) || sd <= 1e-12 * std::abs(mean)) {
      constant.push_back(c);
      for (std::size_t t = 0; t < n; ++t) x.at(t, c) = 0.0;
      continue;
    }
    for (std::size_t t = 0; t < n; ++t) x.at(t, c) = (x.at(t, c) - mean) / sd;
  }
  return constant;
}

// Scales every channel to unit Euclidean norm; all-zero channels stay zero.
inline void l2_normalize_channels(Tensor& x) {
  const std::size_t n = x.dim(0), ch = x.dim(1);
  for (std::size_t c = 0; c < ch; ++c) {
    double ss = 0.0;
    for (std::size_t t = 0; t < n; ++t) ss += x.at(t, c) * x.at(t, c);
    if (ss == 0.0) continue;
    const double norm = std::sqrt(ss);
    for (std::size_t t = 0; t < n; ++t) x.at(t, c) /= norm;
  }
}

inline Frame normalize(const Frame& frame, Normalization scheme) {
  if (frame.normalization != Normalization::raw) {
    throw ContractError("normalize: frame is already normalized (" +
                        std::string(to_string(frame.normalization)) + ")");
  }
  Frame out = frame;
  if (scheme == Normalization::raw) return out;
  const auto constant = zscore_channels(out.data);
  if (!constant.empty()) {
    log::warn("normalize: subject '" + frame.subject_id + "' frame " +
              std::to_string(frame.frame_index) + " has " + std::to_string(constant.size()) +
              " zero-variance channel(s); set to zero");
  }
  if (scheme == Normalization::zscore_l2) l2_normalize_channels(out.data);
  out.normalization = scheme;
  return out;
}

inline FrameSet normalize(const FrameSet& set, Normalization scheme) {
  FrameSet out;
  out.frames.reserve(set.size());
  for (const auto& f : set.frames) out.frames.push_back(normalize(f, scheme));
  return out;
}

// Time-major vector of length frame_len * channels.
inline Tensor flatten_frame(const Frame& frame) {
  return frame.data.reshaped({frame.data.size()});
}

inline Tensor unflatten_frame(const Tensor& flat, std::size_t channels) {
  if (channels == 0 || flat.size() % channels != 0) {
    throw DimensionError("unflatten_frame: " + std::to_string(flat.size()) +
                         " values do not split into " + std::to_string(channels) + " channels");
  }
  return flat.reshaped({flat.size() / channels, channels});
}

}  // namespace eegbench::data

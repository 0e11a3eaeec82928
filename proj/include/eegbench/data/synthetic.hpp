#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::data {

// Two-class toy EEG: HC frames are white noise, SZ frames add a 10 Hz
// sinusoid burst at a random onset to every channel.
struct SyntheticSpec {
  std::size_t frames = 200;
  std::size_t frame_len = 1250;
  std::size_t channels = kChannelCount;
  std::size_t subjects_per_class = 10;
  double sample_rate_hz = kSampleRateHz;
  double noise_std = 1.0;
  double burst_hz = 10.0;
  double burst_amplitude = 5.0;
  double burst_seconds = 3.0;
  std::uint64_t seed = 0;
};

namespace synthetic_detail {

inline void fill_frame(Tensor& x, bool burst, const SyntheticSpec& s, Rng& rng) {
  const std::size_t n = s.frame_len, ch = s.channels;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0.0, s.noise_std);
  if (!burst) return;
  const auto width = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::lround(s.burst_seconds * s.sample_rate_hz)));
  const std::size_t onset = rng.below(n - width + 1);
  for (std::size_t c = 0; c < ch; ++c) {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < width; ++t) {
      const double time = static_cast<double>(t) / s.sample_rate_hz;
      x.at(onset + t, c) += s.burst_amplitude * std::sin(2.0 * std::numbers::pi * s.burst_hz * time + phase);
    }
  }
}

}  // namespace synthetic_detail

// Balanced frame set; labels alternate SZ, HC so any prefix stays balanced.
inline FrameSet synthetic_frames(const SyntheticSpec& s) {
  if (s.frames < 2 || s.frame_len == 0 || s.channels == 0 || s.subjects_per_class == 0)
    throw ParameterError("synthetic_frames: empty specification");
  if (!(s.sample_rate_hz > 0.0) || !(s.burst_seconds >= 0.0) || !(s.noise_std >= 0.0))
    throw ParameterError("synthetic_frames: rates, durations and noise must be non-negative");
  FrameSet set;
  set.frames.reserve(s.frames);
  std::size_t per_class[2] = {0, 0};
  for (std::size_t i = 0; i < s.frames; ++i) {
    const Label label = i % 2 == 0 ? Label::SZ : Label::HC;
    const int cls = label == Label::SZ ? 0 : 1;
    Rng rng = Rng::derive(s.seed, i);
    Frame f;
    const std::size_t within = per_class[cls]++;
    const std::size_t subject = within % s.subjects_per_class;
    f.subject_id = std::string(label == Label::SZ ? "sz" : "hc") + std::to_string(subject + 1);
    f.label = label;
    f.frame_index = within / s.subjects_per_class;
    f.data = Tensor({s.frame_len, s.channels});
    synthetic_detail::fill_frame(f.data, label == Label::SZ, s, rng);
    set.frames.push_back(std::move(f));
  }
  return set;
}

// Per-subject continuous recordings whose consecutive frame_len windows are
// exactly the frames of synthetic_frames(s).
inline std::vector<RawRecording> synthetic_recordings(const SyntheticSpec& s) {
  const FrameSet set = synthetic_frames(s);
  std::vector<RawRecording> recs;
  auto find = [&](const Frame& f) -> RawRecording& {
    for (auto& r : recs)
      if (r.subject_id == f.subject_id) return r;
    RawRecording r;
    r.subject_id = f.subject_id;
    r.label = f.label;
    r.sample_rate_hz = s.sample_rate_hz;
    r.channel_names = s.channels == kChannelCount ? montage_names() : std::vector<std::string>{};
    for (std::size_t c = r.channel_names.size(); c < s.channels; ++c)
      r.channel_names.push_back("Ch" + std::to_string(c + 1));
    recs.push_back(std::move(r));
    return recs.back();
  };
  std::vector<std::vector<double>> buffers;
  for (const auto& f : set.frames) {
    RawRecording& r = find(f);
    const auto idx = static_cast<std::size_t>(&r - recs.data());
    if (buffers.size() <= idx) buffers.resize(idx + 1);
    buffers[idx].insert(buffers[idx].end(), f.data.values().begin(), f.data.values().end());
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::size_t rows = buffers[i].size() / s.channels;
    recs[i].samples = Tensor({rows, s.channels}, std::move(buffers[i]));
  }
  return recs;
}

}  // namespace eegbench::data

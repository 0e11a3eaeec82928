#pragma once

// European Data Format reader and writer.
//
// Layout: a 256-byte main header, then ns blocks of per-signal fields (each
// field stored for all signals before the next field), then data records of
// 16-bit little-endian two's-complement samples, signal by signal.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/log.hpp"

namespace eegbench::data {

struct EdfSignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = -32768;
  int digital_max = 32767;
  std::string prefiltering;
  std::size_t samples_per_record = 0;

  double gain() const {
    return (physical_max - physical_min) / static_cast<double>(digital_max - digital_min);
  }
  double to_physical(std::int16_t d) const {
    return (static_cast<double>(d) - digital_min) * gain() + physical_min;
  }
};

struct EdfHeader {
  std::string version = "0";
  std::string patient;
  std::string recording;
  std::string start_date = "01.01.00";
  std::string start_time = "00.00.00";
  std::size_t header_bytes = 0;
  std::string reserved;
  std::int64_t record_count = -1;
  double record_duration_s = 1.0;
  std::vector<EdfSignalHeader> signals;
};

struct EdfLoadOptions {
  std::string subject_id;  // defaults to the file stem
  Label label = Label::HC;
  // Accept a channel count other than 19 with a warning instead of failing.
  bool allow_nonstandard_channels = false;
};

namespace edf_detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) || s[b] == '\0')) ++b;
  while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) || s[e - 1] == '\0')) --e;
  return std::string(s.substr(b, e - b));
}

inline double parse_double(std::string_view field, const char* what) {
  const std::string t = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw DataError(std::string("edf: malformed header field '") + what + "': '" + t + "'");
  }
  return v;
}

inline std::int64_t parse_int(std::string_view field, const char* what) {
  const std::string t = trim(field);
  std::int64_t v = 0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw DataError(std::string("edf: malformed header field '") + what + "': '" + t + "'");
  }
  return v;
}

// Left-aligned, space-padded ASCII field of exactly `width` bytes.
inline std::string field(std::string_view s, std::size_t width) {
  std::string out(s.substr(0, width));
  out.resize(width, ' ');
  return out;
}

inline std::string number_field(double v, std::size_t width) {
  char buf[64];
  for (int precision = 12; precision >= 1; --precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::string_view(buf).size() <= width) return field(buf, width);
  }
  throw DataError("edf: value " + std::to_string(v) + " does not fit an 8-character field");
}

// Nearest 8-character representable value on the outward side of v.
inline double representable_bound(double v, bool lower_bound) {
  double step = std::max(std::abs(v), 1.0) * 1e-7;
  double x = v;
  for (int i = 0; i < 200; ++i) {
    const double parsed = parse_double(number_field(x, 8), "physical bound");
    if (lower_bound ? parsed <= v : parsed >= v) return parsed;
    x = lower_bound ? x - step : x + step;
    step *= 2.0;
  }
  throw DataError("edf: cannot represent physical bound " + std::to_string(v));
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Maps label spellings such as "EEG Fp1-REF" or "T7" onto the montage name.
inline std::string canonical_channel(std::string_view raw) {
  std::string s = trim(raw);
  if (lower(s.substr(0, 4)) == "eeg ") s = trim(std::string_view(s).substr(4));
  if (auto dash = s.find('-'); dash != std::string::npos && dash > 0) s = s.substr(0, dash);
  static const std::map<std::string, std::string> aliases = {
      {"t7", "T3"}, {"t8", "T4"}, {"p7", "T5"}, {"p8", "T6"}};
  const std::string key = lower(s);
  if (auto it = aliases.find(key); it != aliases.end()) return it->second;
  for (auto name : kMontage)
    if (lower(std::string(name)) == key) return std::string(name);
  return s;
}

}  // namespace edf_detail

inline EdfHeader read_edf_header(std::istream& in, std::uintmax_t file_size) {
  using namespace edf_detail;
  char main[256];
  if (!in.read(main, 256)) throw DataError("edf: file shorter than the 256-byte header");
  std::string_view m(main, 256);
  EdfHeader h;
  h.version = trim(m.substr(0, 8));
  h.patient = trim(m.substr(8, 80));
  h.recording = trim(m.substr(88, 80));
  h.start_date = trim(m.substr(168, 8));
  h.start_time = trim(m.substr(176, 8));
  h.header_bytes = static_cast<std::size_t>(parse_int(m.substr(184, 8), "header bytes"));
  h.reserved = trim(m.substr(192, 44));
  h.record_count = parse_int(m.substr(236, 8), "number of data records");
  h.record_duration_s = parse_double(m.substr(244, 8), "duration of a data record");
  const auto ns = parse_int(m.substr(252, 4), "number of signals");
  if (ns <= 0 || ns > 4096) throw DataError("edf: implausible signal count " + std::to_string(ns));
  if (h.header_bytes != 256 * static_cast<std::size_t>(ns + 1)) {
    throw DataError("edf: header size " + std::to_string(h.header_bytes) + " does not match " +
                    std::to_string(ns) + " signals");
  }
  std::vector<char> sig(256 * static_cast<std::size_t>(ns));
  if (!in.read(sig.data(), static_cast<std::streamsize>(sig.size()))) {
    throw DataError("edf: truncated signal header block");
  }
  const std::size_t n = static_cast<std::size_t>(ns);
  h.signals.resize(n);
  std::size_t off = 0;
  auto each = [&](std::size_t width, auto&& assign) {
    for (std::size_t i = 0; i < n; ++i)
      assign(h.signals[i], std::string_view(sig.data() + off + i * width, width));
    off += width * n;
  };
  each(16, [](EdfSignalHeader& s, std::string_view f) { s.label = trim(f); });
  each(80, [](EdfSignalHeader& s, std::string_view f) { s.transducer = trim(f); });
  each(8, [](EdfSignalHeader& s, std::string_view f) { s.physical_dimension = trim(f); });
  each(8, [](EdfSignalHeader& s, std::string_view f) { s.physical_min = parse_double(f, "physical minimum"); });
  each(8, [](EdfSignalHeader& s, std::string_view f) { s.physical_max = parse_double(f, "physical maximum"); });
  each(8, [](EdfSignalHeader& s, std::string_view f) {
    s.digital_min = static_cast<int>(parse_int(f, "digital minimum"));
  });
  each(8, [](EdfSignalHeader& s, std::string_view f) {
    s.digital_max = static_cast<int>(parse_int(f, "digital maximum"));
  });
  each(80, [](EdfSignalHeader& s, std::string_view f) { s.prefiltering = trim(f); });
  each(8, [](EdfSignalHeader& s, std::string_view f) {
    const auto v = parse_int(f, "samples per record");
    if (v <= 0) throw DataError("edf: samples per record must be positive");
    s.samples_per_record = static_cast<std::size_t>(v);
  });
  for (const auto& s : h.signals) {
    if (s.digital_max <= s.digital_min) {
      throw DataError("edf: signal '" + s.label + "' has digital max <= digital min");
    }
    if (s.physical_max == s.physical_min) {
      throw DataError("edf: signal '" + s.label + "' has an empty physical range");
    }
  }

  std::size_t record_bytes = 0;
  for (const auto& s : h.signals) record_bytes += 2 * s.samples_per_record;
  if (file_size < h.header_bytes) throw DataError("edf: file shorter than its declared header");
  const std::uintmax_t data_bytes = file_size - h.header_bytes;
  if (h.record_count < 0) {
    h.record_count = static_cast<std::int64_t>(data_bytes / record_bytes);
  }
  if (data_bytes < static_cast<std::uintmax_t>(h.record_count) * record_bytes) {
    throw DataError("edf: truncated data record (header declares " +
                    std::to_string(h.record_count) + " records, file holds " +
                    std::to_string(data_bytes / record_bytes) + " complete records)");
  }
  return h;
}

inline RawRecording load_edf(const std::filesystem::path& path, const EdfLoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("edf: cannot open '" + path.string() + "'");
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("edf: cannot stat '" + path.string() + "'");
  const EdfHeader h = read_edf_header(in, file_size);

  // EDF+ annotation channels carry no signal.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < h.signals.size(); ++i)
    if (h.signals[i].label != "EDF Annotations") keep.push_back(i);
  if (keep.empty()) throw DataError("edf: no signal channels in '" + path.string() + "'");
  const std::size_t per_record = h.signals[keep[0]].samples_per_record;
  for (std::size_t i : keep) {
    if (h.signals[i].samples_per_record != per_record) {
      throw DataError("edf: channels of '" + path.string() + "' have different sample rates");
    }
  }

  RawRecording rec;
  rec.subject_id = opts.subject_id.empty() ? path.stem().string() : opts.subject_id;
  rec.label = opts.label;
  rec.sample_rate_hz = static_cast<double>(per_record) / h.record_duration_s;
  const std::size_t ch = keep.size();
  const auto records = static_cast<std::size_t>(h.record_count);
  rec.samples = Tensor({records * per_record, ch});

  std::size_t record_bytes = 0;
  for (const auto& s : h.signals) record_bytes += 2 * s.samples_per_record;
  std::vector<unsigned char> buf(record_bytes);
  for (std::size_t r = 0; r < records; ++r) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record_bytes))) {
      throw DataError("edf: truncated data record " + std::to_string(r));
    }
    std::size_t off = 0;
    std::size_t out_c = 0;
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
      const auto& s = h.signals[i];
      const bool wanted = out_c < ch && keep[out_c] == i;
      if (wanted) {
        for (std::size_t j = 0; j < s.samples_per_record; ++j) {
          const auto lo = buf[off + 2 * j], hi = buf[off + 2 * j + 1];
          const auto d = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
          rec.samples.at(r * per_record + j, out_c) = s.to_physical(d);
        }
        ++out_c;
      }
      off += 2 * s.samples_per_record;
    }
  }

  for (std::size_t i : keep) rec.channel_names.push_back(edf_detail::canonical_channel(h.signals[i].label));

  if (ch != kChannelCount) {
    const std::string msg = "edf: '" + path.string() + "' has " + std::to_string(ch) +
                            " channels, expected " + std::to_string(kChannelCount);
    if (!opts.allow_nonstandard_channels) throw DataError(msg);
    log::warn(msg);
    return rec;
  }

  // Reorder into montage order when every montage electrode is present.
  std::vector<std::size_t> order;
  for (auto name : kMontage) {
    auto it = std::find(rec.channel_names.begin(), rec.channel_names.end(), name);
    if (it == rec.channel_names.end()) break;
    order.push_back(static_cast<std::size_t>(it - rec.channel_names.begin()));
  }
  if (order.size() != kChannelCount) {
    log::warn("edf: channel names of '" + path.string() +
              "' do not match the 10-20 montage; keeping file order");
    return rec;
  }
  Tensor reordered(rec.samples.shape());
  for (std::size_t t = 0; t < rec.sample_count(); ++t)
    for (std::size_t c = 0; c < ch; ++c) reordered.at(t, c) = rec.samples.at(t, order[c]);
  rec.samples = std::move(reordered);
  rec.channel_names = montage_names();
  return rec;
}

struct EdfWriteOptions {
  std::size_t samples_per_record = 0;  // default: one second of samples
  int digital_min = -32768;
  int digital_max = 32767;
  // Physical range per channel; defaults to the channel's data range.
  std::optional<std::pair<double, double>> physical_range;
};

// Writes a plain EDF file. Samples are quantized to 16 bits over each
// channel's physical range.
inline void write_edf(const std::filesystem::path& path, const RawRecording& rec,
                      const EdfWriteOptions& opts = {}) {
  using namespace edf_detail;
  const std::size_t n = rec.sample_count(), ch = rec.channel_count();
  std::size_t spr = opts.samples_per_record;
  if (spr == 0) spr = static_cast<std::size_t>(std::lround(rec.sample_rate_hz));
  if (spr == 0 || n % spr != 0) {
    throw DataError("write_edf: sample count " + std::to_string(n) +
                    " is not a whole number of records of " + std::to_string(spr));
  }
  const double duration = static_cast<double>(spr) / rec.sample_rate_hz;
  std::vector<EdfSignalHeader> sigs(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    auto& s = sigs[c];
    s.label = c < rec.channel_names.size() ? rec.channel_names[c] : "Ch" + std::to_string(c + 1);
    s.physical_dimension = "uV";
    if (opts.physical_range) {
      s.physical_min = opts.physical_range->first;
      s.physical_max = opts.physical_range->second;
    } else {
      double lo = rec.samples.at(0, c), hi = lo;
      for (std::size_t t = 0; t < n; ++t) {
        lo = std::min(lo, rec.samples.at(t, c));
        hi = std::max(hi, rec.samples.at(t, c));
      }
      if (hi == lo) hi = lo + 1.0;
      s.physical_min = lo;
      s.physical_max = hi;
    }
    // Quantize against the values the 8-character fields will actually hold.
    s.physical_min = representable_bound(s.physical_min, true);
    s.physical_max = representable_bound(s.physical_max, false);
    if (s.physical_max <= s.physical_min) {
      throw DataError("write_edf: physical range collapses in the 8-character field");
    }
    s.digital_min = opts.digital_min;
    s.digital_max = opts.digital_max;
    s.samples_per_record = spr;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_edf: cannot create '" + path.string() + "'");
  std::string head;
  head += field("0", 8);
  head += field(rec.subject_id, 80);
  head += field("Startdate 01-JAN-2000 X X X label " + std::string(to_string(rec.label)), 80);
  head += field("01.01.00", 8);
  head += field("00.00.00", 8);
  head += field(std::to_string(256 * (ch + 1)), 8);
  head += field("", 44);
  head += field(std::to_string(n / spr), 8);
  head += number_field(duration, 8);
  head += field(std::to_string(ch), 4);
  for (const auto& s : sigs) head += field(s.label, 16);
  for (const auto& s : sigs) head += field(s.transducer, 80);
  for (const auto& s : sigs) head += field(s.physical_dimension, 8);
  for (const auto& s : sigs) head += number_field(s.physical_min, 8);
  for (const auto& s : sigs) head += number_field(s.physical_max, 8);
  for (const auto& s : sigs) head += field(std::to_string(s.digital_min), 8);
  for (const auto& s : sigs) head += field(std::to_string(s.digital_max), 8);
  for (const auto& s : sigs) head += field(s.prefiltering, 80);
  for (const auto& s : sigs) head += field(std::to_string(s.samples_per_record), 8);
  for (std::size_t c = 0; c < ch; ++c) head += field("", 32);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));

  std::vector<unsigned char> buf(2 * spr);
  for (std::size_t r = 0; r < n / spr; ++r) {
    for (std::size_t c = 0; c < ch; ++c) {
      const auto& s = sigs[c];
      for (std::size_t j = 0; j < spr; ++j) {
        const double x = rec.samples.at(r * spr + j, c);
        const double d = std::round((x - s.physical_min) / s.gain()) + s.digital_min;
        const auto q = static_cast<std::int16_t>(
            std::clamp(d, static_cast<double>(s.digital_min), static_cast<double>(s.digital_max)));
        const auto u = static_cast<std::uint16_t>(q);
        buf[2 * j] = static_cast<unsigned char>(u & 0xff);
        buf[2 * j + 1] = static_cast<unsigned char>(u >> 8);
      }
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
  }
  if (!out) throw DataError("write_edf: write failed for '" + path.string() + "'");
}

}  // namespace eegbench::data

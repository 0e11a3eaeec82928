#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "eegbench/data/manifest.hpp"
#include "eegbench/data/preprocess.hpp"
#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"

namespace eegbench::data {

// Binary frame cache, all integers and reals little-endian:
//   magic "EEGBFRMC" | u32 version | u64 content hash | u64 frame_len |
//   u64 channels | u64 frame count | frames...
// Each frame: u32 id length | id bytes | u8 label (0 SZ, 1 HC) |
//   u8 normalization | u64 frame index | frame_len*channels f64, time-major.
inline constexpr std::array<char, 8> kCacheMagic = {'E', 'E', 'G', 'B', 'F', 'R', 'M', 'C'};
inline constexpr std::uint32_t kCacheVersion = 1;

// 64-bit FNV-1a, chainable through `h`.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h) { return fnv1a(s.data(), s.size(), h); }

inline std::uint64_t hash_file(const std::filesystem::path& path, std::uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cache: cannot read '" + path.string() + "'");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a(buf.data(), static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

// Hash over everything that determines the cache content.
inline std::uint64_t hash_inputs(const std::filesystem::path& dataset_dir, const Manifest& m,
                                 std::size_t frame_len) {
  std::uint64_t h = fnv1a("eegbench-frames-v" + std::to_string(kCacheVersion), 0xcbf29ce484222325ULL);
  h = fnv1a("len=" + std::to_string(frame_len) + ";csv_rate=" + std::to_string(m.csv_sample_rate_hz), h);
  for (const auto& e : m.subjects) {
    h = fnv1a(e.id + "|" + std::string(to_string(e.label)) + "|", h);
    h = hash_file(resolve(dataset_dir, e.file), h);
  }
  return h;
}

namespace cache_detail {

template <typename T>
void put(std::ostream& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  U u = std::bit_cast<U>(v);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw DataError("cache: truncated file");
  U u = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) u |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
  return std::bit_cast<T>(u);
}

inline void put_reals(std::ostream& out, const double* v, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) put(out, v[i]);
  }
}

inline void get_reals(std::istream& in, double* v, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * sizeof(double))))
      throw DataError("cache: truncated frame data");
  } else {
    for (std::size_t i = 0; i < n; ++i) v[i] = get<double>(in);
  }
}

}  // namespace cache_detail

struct FrameCache {
  std::uint32_t version = kCacheVersion;
  std::uint64_t content_hash = 0;
  std::size_t frame_len = 0;
  std::size_t channels = 0;
  FrameSet frames;
};

inline void write_frame_cache(const std::filesystem::path& path, const FrameSet& set,
                              std::uint64_t content_hash) {
  if (set.empty()) throw DataError("cache: refusing to write an empty frame set");
  const std::size_t len = set[0].length(), ch = set[0].channels();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cache: cannot create '" + path.string() + "'");
  out.write(kCacheMagic.data(), kCacheMagic.size());
  cache_detail::put<std::uint32_t>(out, kCacheVersion);
  cache_detail::put<std::uint64_t>(out, content_hash);
  cache_detail::put<std::uint64_t>(out, len);
  cache_detail::put<std::uint64_t>(out, ch);
  cache_detail::put<std::uint64_t>(out, set.size());
  for (const auto& f : set.frames) {
    if (f.length() != len || f.channels() != ch) throw DimensionError("cache: frames differ in shape");
    cache_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.subject_id.size()));
    out.write(f.subject_id.data(), static_cast<std::streamsize>(f.subject_id.size()));
    cache_detail::put<std::uint8_t>(out, f.label == Label::SZ ? 0 : 1);
    cache_detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(f.normalization));
    cache_detail::put<std::uint64_t>(out, f.frame_index);
    cache_detail::put_reals(out, f.data.data(), f.data.size());
  }
  if (!out) throw DataError("cache: write failed for '" + path.string() + "'");
}

namespace cache_detail {

inline void read_preamble(std::istream& in, FrameCache& c, std::uint64_t& count) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCacheMagic)
    throw DataError("cache: not a frame cache file");
  c.version = get<std::uint32_t>(in);
  if (c.version != kCacheVersion) {
    throw DataError("cache: unsupported version " + std::to_string(c.version) + " (expected " +
                    std::to_string(kCacheVersion) + ")");
  }
  c.content_hash = get<std::uint64_t>(in);
  c.frame_len = get<std::uint64_t>(in);
  c.channels = get<std::uint64_t>(in);
  count = get<std::uint64_t>(in);
}

}  // namespace cache_detail

// Reads only the header; the frame set is left empty.
inline FrameCache read_frame_cache_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cache: cannot open '" + path.string() + "'");
  FrameCache c;
  std::uint64_t count = 0;
  cache_detail::read_preamble(in, c, count);
  return c;
}

inline FrameCache read_frame_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cache: cannot open '" + path.string() + "'");
  FrameCache c;
  std::uint64_t count = 0;
  cache_detail::read_preamble(in, c, count);
  c.frames.frames.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Frame f;
    const auto id_len = cache_detail::get<std::uint32_t>(in);
    f.subject_id.resize(id_len);
    if (!in.read(f.subject_id.data(), id_len)) throw DataError("cache: truncated subject id");
    const auto label = cache_detail::get<std::uint8_t>(in);
    const auto norm = cache_detail::get<std::uint8_t>(in);
    if (label > 1 || norm > 2) throw DataError("cache: corrupt frame record " + std::to_string(i));
    f.label = label == 0 ? Label::SZ : Label::HC;
    f.normalization = static_cast<Normalization>(norm);
    f.frame_index = cache_detail::get<std::uint64_t>(in);
    f.data = Tensor({c.frame_len, c.channels});
    cache_detail::get_reals(in, f.data.data(), f.data.size());
    c.frames.frames.push_back(std::move(f));
  }
  return c;
}

// Loads and segments every subject of a manifest, in manifest order.
inline FrameSet build_frames(const std::filesystem::path& dataset_dir, const Manifest& m,
                             std::size_t frame_len = kFrameLength,
                             bool allow_nonstandard_channels = false) {
  if (m.empty()) throw ParameterError("ingest: manifest lists no subjects");
  FrameSet set;
  std::size_t channels = 0;
  for (const auto& e : m.subjects) {
    auto rec = load_subject(dataset_dir, m, e, allow_nonstandard_channels);
    if (channels == 0) channels = rec.channel_count();
    if (rec.channel_count() != channels) {
      throw DataError("ingest: subject '" + e.id + "' has " + std::to_string(rec.channel_count()) +
                      " channels, earlier subjects have " + std::to_string(channels));
    }
    auto frames = segment(rec, static_cast<std::int64_t>(frame_len));
    for (auto& f : frames) set.frames.push_back(std::move(f));
  }
  return set;
}

}  // namespace eegbench::data

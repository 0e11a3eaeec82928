#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"

namespace eegbench::data {

namespace csv_detail {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

}  // namespace csv_detail

// One column per channel, header row of channel names, one sample per row.
inline RawRecording load_csv(const std::filesystem::path& path, double sample_rate_hz,
                             const std::string& subject_id = {}, Label label = Label::HC) {
  if (!(sample_rate_hz > 0.0)) throw ParameterError("load_csv: sample rate must be positive");
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: '" + path.string() + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  RawRecording rec;
  rec.subject_id = subject_id.empty() ? path.stem().string() : subject_id;
  rec.label = label;
  rec.sample_rate_hz = sample_rate_hz;
  for (auto& name : csv_detail::split(csv_detail::strip(line)))
    rec.channel_names.push_back(csv_detail::strip(name));
  const std::size_t ch = rec.channel_names.size();
  if (ch == 0) throw DataError("csv: missing header row");

  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = csv_detail::strip(line);
    if (line.empty()) continue;
    auto cells = csv_detail::split(line);
    if (cells.size() != ch) {
      throw DataError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(ch));
    }
    for (auto& cell : cells) {
      const std::string c = csv_detail::strip(cell);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size()) {
        throw DataError("csv: non-numeric cell '" + c + "' in row " + std::to_string(row));
      }
      values.push_back(v);
    }
  }
  if (values.empty()) throw DataError("csv: '" + path.string() + "' has no data rows");
  const std::size_t rows = values.size() / ch;
  rec.samples = Tensor({rows, ch}, std::move(values));
  return rec;
}

// Values are written with 17 significant digits so they read back exactly.
inline void write_csv(const std::filesystem::path& path, const RawRecording& rec) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot create '" + path.string() + "'");
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    if (c) out << ',';
    out << (c < rec.channel_names.size() ? rec.channel_names[c] : "Ch" + std::to_string(c + 1));
  }
  out << '\n';
  char buf[32];
  for (std::size_t t = 0; t < rec.sample_count(); ++t) {
    for (std::size_t c = 0; c < rec.channel_count(); ++c) {
      if (c) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", rec.samples.at(t, c));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("csv: write failed for '" + path.string() + "'");
}

}  // namespace eegbench::data

#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "eegbench/data/csv.hpp"
#include "eegbench/data/edf.hpp"
#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"

namespace eegbench::data {

// One labeled subject file. Paths are relative to the dataset directory
// unless absolute.
struct ManifestEntry {
  std::string id;
  std::string file;
  Label label = Label::HC;
};

struct Manifest {
  std::vector<ManifestEntry> subjects;
  double csv_sample_rate_hz = kSampleRateHz;

  bool empty() const { return subjects.empty(); }
};

// Format:
//   {"subjects": [{"id": "s01", "file": "s01.edf", "label": "SZ"}, ...],
//    "csv_sample_rate_hz": 250}
inline Manifest parse_manifest(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("subjects") || !j["subjects"].is_array()) {
    throw ParameterError("manifest: expected an object with a 'subjects' array");
  }
  Manifest m;
  if (j.contains("csv_sample_rate_hz")) {
    if (!j["csv_sample_rate_hz"].is_number() || !(j["csv_sample_rate_hz"].get<double>() > 0.0))
      throw ParameterError("manifest: 'csv_sample_rate_hz' must be a positive number");
    m.csv_sample_rate_hz = j["csv_sample_rate_hz"].get<double>();
  }
  std::set<std::string> ids;
  std::size_t idx = 0;
  for (const auto& s : j["subjects"]) {
    const std::string where = "manifest: subject #" + std::to_string(idx++);
    if (!s.is_object()) throw ParameterError(where + " is not an object");
    if (!s.contains("file") || !s["file"].is_string()) throw ParameterError(where + " lacks 'file'");
    if (!s.contains("label") || !s["label"].is_string())
      throw ParameterError(where + " lacks a label");
    auto label = parse_label(s["label"].get<std::string>());
    if (!label) {
      throw ParameterError(where + " has label '" + s["label"].get<std::string>() +
                           "', expected SZ or HC");
    }
    ManifestEntry e;
    e.file = s["file"].get<std::string>();
    e.id = s.contains("id") && s["id"].is_string() ? s["id"].get<std::string>()
                                                   : std::filesystem::path(e.file).stem().string();
    e.label = *label;
    if (!ids.insert(e.id).second) throw ParameterError("manifest: duplicate subject id '" + e.id + "'");
    m.subjects.push_back(std::move(e));
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError("manifest: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_manifest(j);
}

inline std::filesystem::path resolve(const std::filesystem::path& dataset_dir,
                                     const std::string& file) {
  std::filesystem::path p(file);
  return p.is_absolute() ? p : dataset_dir / p;
}

// Loads one manifest entry; .csv files go through the CSV reader, all else is EDF.
inline RawRecording load_subject(const std::filesystem::path& dataset_dir, const Manifest& m,
                                 const ManifestEntry& e, bool allow_nonstandard_channels = false) {
  const auto path = resolve(dataset_dir, e.file);
  if (!std::filesystem::exists(path)) {
    throw DataError("manifest: file '" + path.string() + "' for subject '" + e.id + "' not found");
  }
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".csv") return load_csv(path, m.csv_sample_rate_hz, e.id, e.label);
  return load_edf(path, EdfLoadOptions{e.id, e.label, allow_nonstandard_channels});
}

}  // namespace eegbench::data

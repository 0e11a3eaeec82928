#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "eegbench/baselines/baseline.hpp"
#include "eegbench/data/recording.hpp"
#include "eegbench/data/synthetic.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/models/spec.hpp"
#include "eegbench/models/train.hpp"

namespace eegbench::experiment {

using nlohmann::json;

inline constexpr const char* kDatasetRootEnv = "EEGBENCH_DATASET_ROOT";

// Schema (all keys optional except "method"; unknown keys are rejected):
//   method          one of the 7 baselines or 7 deep models
//   label           row name in tables (default: method)
//   normalization   raw | zscore | zscore_l2            (default zscore_l2)
//   activation      relu | leaky_relu | selu, deep only  (default relu)
//   dataset         directory holding the subject files  (else $EEGBENCH_DATASET_ROOT)
//   manifest        manifest path (default <dataset>/manifest.json)
//   cache           frame cache path (default <dataset>/frames.cache)
//   frame_len       samples per frame (default 6250)
//   synthetic       {frames, frame_len, channels, subjects_per_class, noise_std,
//                    burst_hz, burst_amplitude, burst_seconds, seed}; replaces the dataset
//   train           {epochs, batch_size, learning_rate, optimizer, validation_fraction,
//                    micro_batch, l2}; defaults per model family
//   baseline        {knn_k, svm_c, svm_gamma, svm_tolerance, svm_max_passes,
//                    tree_max_depth, tree_min_split, n_estimators, gnb_var_floor, jobs}
//   k, seed, subject_split, reduced, checkpoints, output
struct ExperimentConfig {
  std::string method;
  std::string label;
  data::Normalization normalization = data::Normalization::zscore_l2;
  nn::Activation activation = nn::Activation::relu;
  bool activation_given = false;

  std::optional<std::filesystem::path> dataset;
  bool dataset_from_env = false;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> cache;
  std::size_t frame_len = data::kFrameLength;
  std::optional<data::SyntheticSpec> synthetic;

  models::TrainConfig train;
  double l2_coeff = 0.01;
  baselines::BaselineParams baseline;

  std::size_t k = 5;
  std::uint64_t seed = 0;
  bool subject_split = false;
  bool reduced = false;
  bool checkpoints = false;
  std::filesystem::path output = "results";

  bool is_deep() const { return models::is_model_name(method); }
  std::optional<baselines::BaselineKind> baseline_kind() const { return baselines::parse_baseline_kind(method); }

  std::filesystem::path manifest_path() const { return manifest ? *manifest : *dataset / "manifest.json"; }
  std::filesystem::path cache_path() const { return cache ? *cache : *dataset / "frames.cache"; }
};

// Command-line overrides; unset fields leave the config alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool allow_raw = false;
  bool subject_split = false;
  bool reduced = false;
};

namespace config_detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError("config: " + where + " must be an object");
  for (const auto& [key, v] : j.items()) {
    if (!allowed.count(key)) throw ParameterError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      const json& v = j.at(key);
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw ParameterError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!j.at(key).is_number()) throw ParameterError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.at(key).is_boolean()) throw ParameterError("");
    } else {
      if (!j.at(key).is_string()) throw ParameterError("");
    }
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    const char* kind = std::is_same_v<T, std::string> ? "a string"
                       : std::is_same_v<T, bool>      ? "a boolean"
                       : std::is_same_v<T, double>    ? "a number"
                                                      : "a non-negative integer";
    throw ParameterError("config: '" + key + "' in " + where + " must be " + kind);
  }
}

template <typename T>
void read(const json& j, const std::string& key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  check_keys(j,
             {"method", "label", "normalization", "activation", "dataset", "manifest", "cache", "frame_len",
              "synthetic", "train", "baseline", "k", "seed", "subject_split", "reduced", "checkpoints", "output"},
             "config");
  ExperimentConfig c;
  if (!j.contains("method")) throw ParameterError("config: 'method' is required");
  c.method = get<std::string>(j, "method", "config");
  if (!c.is_deep() && !c.baseline_kind()) {
    throw ParameterError("config: unknown method '" + c.method +
                         "' (expected knn, dtree, svm_rbf, gnb, bagging, rforest, etrees, CNN-1, CNN-2, "
                         "CNN-3, LSTM-1, LSTM-2, CNN-LSTM-1 or CNN-LSTM-2)");
  }
  c.label = c.method;
  read(j, "label", c.label, "config");
  if (j.contains("normalization")) {
    auto n = data::parse_normalization(get<std::string>(j, "normalization", "config"));
    if (!n) throw ParameterError("config: normalization must be raw, zscore or zscore_l2");
    c.normalization = *n;
  }
  if (j.contains("activation")) {
    auto a = nn::parse_activation(get<std::string>(j, "activation", "config"));
    if (!a || (*a != nn::Activation::relu && *a != nn::Activation::leaky_relu && *a != nn::Activation::selu))
      throw ParameterError("config: activation must be relu, leaky_relu or selu");
    c.activation = *a;
    c.activation_given = true;
  }
  auto path = [&](const std::string& key) -> std::optional<std::filesystem::path> {
    if (!j.contains(key)) return std::nullopt;
    std::filesystem::path p = get<std::string>(j, key, "config");
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  c.dataset = path("dataset");
  c.manifest = path("manifest");
  c.cache = path("cache");
  read(j, "frame_len", c.frame_len, "config");
  if (c.frame_len == 0) throw ParameterError("config: frame_len must be positive");

  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    check_keys(s,
               {"frames", "frame_len", "channels", "subjects_per_class", "noise_std", "burst_hz",
                "burst_amplitude", "burst_seconds", "seed"},
               "synthetic");
    data::SyntheticSpec spec;
    read(s, "frames", spec.frames, "synthetic");
    read(s, "frame_len", spec.frame_len, "synthetic");
    read(s, "channels", spec.channels, "synthetic");
    read(s, "subjects_per_class", spec.subjects_per_class, "synthetic");
    read(s, "noise_std", spec.noise_std, "synthetic");
    read(s, "burst_hz", spec.burst_hz, "synthetic");
    read(s, "burst_amplitude", spec.burst_amplitude, "synthetic");
    read(s, "burst_seconds", spec.burst_seconds, "synthetic");
    read(s, "seed", spec.seed, "synthetic");
    c.synthetic = spec;
    if (c.dataset || c.manifest || c.cache)
      throw ParameterError("config: 'synthetic' cannot be combined with dataset, manifest or cache");
  }

  if (c.is_deep()) c.train = models::TrainConfig::for_family(models::build(c.method, c.activation).family());
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, {"epochs", "batch_size", "learning_rate", "optimizer", "validation_fraction", "micro_batch", "l2"},
               "train");
    read(t, "epochs", c.train.epochs, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "learning_rate", c.train.learning_rate, "train");
    read(t, "validation_fraction", c.train.validation_fraction, "train");
    read(t, "micro_batch", c.train.micro_batch, "train");
    read(t, "l2", c.l2_coeff, "train");
    if (t.contains("optimizer")) {
      auto o = nn::parse_optimizer(get<std::string>(t, "optimizer", "train"));
      if (!o) throw ParameterError("config: optimizer must be adam or sgd");
      c.train.optimizer = *o;
    }
    c.train.validate();
    if (!(c.l2_coeff >= 0.0)) throw ParameterError("config: l2 must be non-negative");
  }
  if (j.contains("baseline")) {
    const json& b = j["baseline"];
    check_keys(b,
               {"knn_k", "svm_c", "svm_gamma", "svm_tolerance", "svm_max_passes", "tree_max_depth", "tree_min_split",
                "n_estimators", "gnb_var_floor", "jobs"},
               "baseline");
    auto& p = c.baseline;
    read(b, "knn_k", p.knn_k, "baseline");
    read(b, "svm_c", p.svm_c, "baseline");
    read(b, "svm_gamma", p.svm_gamma, "baseline");
    read(b, "svm_tolerance", p.svm_tolerance, "baseline");
    read(b, "svm_max_passes", p.svm_max_passes, "baseline");
    read(b, "tree_max_depth", p.tree_max_depth, "baseline");
    read(b, "tree_min_split", p.tree_min_split, "baseline");
    read(b, "n_estimators", p.n_estimators, "baseline");
    read(b, "gnb_var_floor", p.gnb_var_floor, "baseline");
    read(b, "jobs", p.jobs, "baseline");
  }
  read(j, "k", c.k, "config");
  if (c.k < 2) throw ParameterError("config: k must be at least 2");
  read(j, "seed", c.seed, "config");
  read(j, "subject_split", c.subject_split, "config");
  read(j, "reduced", c.reduced, "config");
  read(j, "checkpoints", c.checkpoints, "config");
  if (auto o = path("output")) c.output = *o;
  return c;
}

inline json read_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParameterError(std::string(what) + ": cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string(what) + ": '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path, "config"), path.parent_path());
}

// Applies command-line overrides, the dataset-root environment variable and
// the cross-field rules. Throws ParameterError on violations.
inline void finalize(ExperimentConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = *o.out;
  c.subject_split = c.subject_split || o.subject_split;
  c.reduced = c.reduced || o.reduced;
  c.train.seed = c.seed;
  if (!c.synthetic && !c.dataset) {
    if (const char* env = std::getenv(kDatasetRootEnv); env && *env) {
      c.dataset = std::filesystem::path(env);
      c.dataset_from_env = true;
    } else if (!c.cache) {
      throw ParameterError(std::string("config: no dataset given; set 'dataset', 'cache' or ") + kDatasetRootEnv);
    }
  }
  if (!c.dataset && !c.synthetic && !c.cache) throw ParameterError("config: no data source");
  if (c.is_deep() && c.normalization == data::Normalization::raw && !o.allow_raw) {
    throw ParameterError("config: deep models are not trained on raw signals; pass --allow-raw to override");
  }
}

}  // namespace eegbench::experiment

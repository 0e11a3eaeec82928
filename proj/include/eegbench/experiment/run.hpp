#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "eegbench/data/folds.hpp"
#include "eegbench/data/frame_cache.hpp"
#include "eegbench/data/manifest.hpp"
#include "eegbench/data/preprocess.hpp"
#include "eegbench/data/synthetic.hpp"
#include "eegbench/eval/artifacts.hpp"
#include "eegbench/eval/cross_validate.hpp"
#include "eegbench/eval/report.hpp"
#include "eegbench/eval/runners.hpp"
#include "eegbench/experiment/config.hpp"
#include "eegbench/log.hpp"
#include "eegbench/models/checkpoint.hpp"

namespace eegbench::experiment {

inline constexpr const char* kResultsFormat = "eegbench-results/1";

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// File-name-safe form of a method or label.
inline std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  return out;
}

// ---- ingest ----

inline json frame_summary(const data::FrameSet& set) {
  std::set<std::string> sz, hc;
  for (const auto& f : set.frames) (f.label == data::Label::SZ ? sz : hc).insert(f.subject_id);
  const auto counts = set.class_counts();
  return {{"frames", set.size()},
          {"frames_sz", counts.sz},
          {"frames_hc", counts.hc},
          {"subjects", sz.size() + hc.size()},
          {"subjects_sz", sz.size()},
          {"subjects_hc", hc.size()},
          {"frame_len", set.empty() ? 0 : set[0].length()},
          {"channels", set.empty() ? 0 : set[0].channels()}};
}

struct IngestResult {
  data::FrameSet frames;
  std::uint64_t content_hash = 0;
  json summary;
};

// Parses every subject of the manifest and writes the frame cache plus a
// <cache>.summary.json next to it.
inline IngestResult ingest(const std::filesystem::path& dataset_dir, const std::filesystem::path& manifest_path,
                           const std::filesystem::path& cache_path, std::size_t frame_len = data::kFrameLength) {
  const data::Manifest m = data::load_manifest(manifest_path);
  if (m.empty()) throw ParameterError("ingest: manifest lists no subjects");
  IngestResult r;
  r.frames = data::build_frames(dataset_dir, m, frame_len);
  r.content_hash = data::hash_inputs(dataset_dir, m, frame_len);
  data::write_frame_cache(cache_path, r.frames, r.content_hash);
  r.summary = frame_summary(r.frames);
  r.summary["content_hash"] = hex64(r.content_hash);
  eval::write_text(std::filesystem::path(cache_path.string() + ".summary.json"), r.summary.dump(2) + "\n");
  return r;
}

// ---- frame loading ----

struct LoadedFrames {
  data::FrameSet set;
  json info;
};

// Synthetic frames, or the cache; the cache is rebuilt when its content hash
// no longer matches the dataset files.
inline LoadedFrames load_frames(const ExperimentConfig& c) {
  LoadedFrames out;
  if (c.synthetic) {
    out.set = data::synthetic_frames(*c.synthetic);
    const auto& s = *c.synthetic;
    out.info = {{"source", "synthetic"},
                {"synthetic",
                 {{"frames", s.frames},
                  {"frame_len", s.frame_len},
                  {"channels", s.channels},
                  {"subjects_per_class", s.subjects_per_class},
                  {"noise_std", s.noise_std},
                  {"burst_hz", s.burst_hz},
                  {"burst_amplitude", s.burst_amplitude},
                  {"burst_seconds", s.burst_seconds},
                  {"seed", s.seed}}}};
  } else {
    const std::filesystem::path cache = c.cache ? *c.cache : *c.dataset / "frames.cache";
    std::uint64_t hash = 0;
    if (c.dataset) {
      const data::Manifest m = data::load_manifest(c.manifest_path());
      hash = data::hash_inputs(*c.dataset, m, c.frame_len);
      bool fresh = false;
      if (std::filesystem::exists(cache)) {
        const auto h = data::read_frame_cache_header(cache);
        fresh = h.content_hash == hash && h.frame_len == c.frame_len;
        if (!fresh) log::warn("frame cache '" + cache.string() + "' is stale; re-ingesting");
      }
      if (fresh) {
        out.set = std::move(data::read_frame_cache(cache).frames);
      } else {
        out.set = ingest(*c.dataset, c.manifest_path(), cache, c.frame_len).frames;
      }
    } else {
      auto fc = data::read_frame_cache(cache);
      hash = fc.content_hash;
      out.set = std::move(fc.frames);
    }
    out.info = {{"source", "dataset"}, {"content_hash", hex64(hash)}};
  }
  out.info["ingested"] = frame_summary(out.set);
  if (c.reduced) {
    data::FrameSet r;
    for (std::size_t i = 0; i < out.set.size(); i += 5) r.frames.push_back(std::move(out.set.frames[i]));
    out.set = std::move(r);
  }
  out.info["reduced"] = c.reduced ? json("every 5th frame") : json(false);
  out.info["used"] = frame_summary(out.set);
  return out;
}

// ---- manifest of decisions ----

inline json decisions_manifest(const ExperimentConfig& c, const models::ModelSpec* spec, const data::FoldSplit& split,
                               const json& data_info) {
  json fold_seeds = json::array();
  for (std::size_t f = 0; f < split.k; ++f) fold_seeds.push_back(eval::fold_seed(c.seed, f));
  json m = {
      {"method", c.method},
      {"label", c.label},
      {"normalization", data::to_string(c.normalization)},
      {"seed", c.seed},
      {"data", data_info},
      {"split",
       {{"k", split.k},
        {"seed", split.seed},
        {"subject_wise", split.subject_wise},
        {"stratified", true},
        {"fold_sizes", split.fold_sizes()}}},
      {"fold_seeds", fold_seeds},
      {"fold_seed_rule", "derive(seed, 0x500000000 + fold)"},
      {"metrics",
       {{"positive_class", "SZ"},
        {"std", "population (divide by k)"},
        {"zero_denominator", "metric reported as 0 and flagged"},
        {"percent_decimals", 2},
        {"auc", "trapezoid over unique score thresholds, equal scores grouped"},
        {"pooled_roc", "out-of-fold scores of all folds pooled"},
        {"curves", "per-epoch mean over folds"}}},
  };
  if (spec) {
    const nn::OptimizerState adam;
    m["activation"] = nn::to_string(c.activation);
    m["architecture"] = models::to_json(*spec);
    m["training"] = models::to_json(c.train);
    m["training"]["seed_rule"] = "per fold: fold_seeds[f]; streams derived for init, shuffle, dropout, validation";
    m["optimizer"] = c.train.optimizer == nn::OptimizerKind::adam
                         ? json{{"name", "adam"},
                                {"learning_rate", c.train.learning_rate},
                                {"beta1", adam.beta1},
                                {"beta2", adam.beta2},
                                {"epsilon", adam.epsilon}}
                         : json{{"name", "sgd"}, {"learning_rate", c.train.learning_rate}};
    m["initialization"] = "glorot uniform weights; zero biases; LSTM forget-gate bias 1";
    m["loss"] = "binary cross-entropy on the sigmoid head, probabilities clamped to [1e-7, 1-1e-7]";
    m["regularization"] = {{"l2_coeff", spec->l2_coeff},
                           {"penalized", "conv, dense and LSTM input/recurrent weights; biases excluded"}};
    m["dropout"] = "inverted; one mask per sample and layer, seeded per epoch position";
    m["label_rule"] = spec->output_units() == 2 ? "argmax, ties to SZ" : "SZ iff output >= 0.5";
    m["roc_score"] = spec->output_units() == 2 ? "(1 + p_SZ - p_HC) / 2" : "sigmoid output";
  } else {
    const auto kind = *c.baseline_kind();
    m["hyperparameters"] = baselines::to_json(c.baseline, kind);
    m["features"] = "flattened time-major frame";
    const char* score = "";
    switch (kind) {
      case baselines::BaselineKind::knn: score = "fraction of SZ among the k neighbours"; break;
      case baselines::BaselineKind::svm_rbf: score = "signed decision value"; break;
      case baselines::BaselineKind::gnb: score = "posterior P(SZ)"; break;
      case baselines::BaselineKind::dtree: score = "leaf SZ fraction"; break;
      default: score = "fraction of estimators voting SZ"; break;
    }
    m["roc_score"] = score;
    if (c.activation_given) m["activation"] = "ignored for baselines";
  }
  return m;
}

// ---- run ----

struct RunOutcome {
  eval::MetricsReport report;
  json results;
  std::filesystem::path results_path;
};

inline RunOutcome run_experiment(const ExperimentConfig& c, std::size_t jobs = 1) {
  LoadedFrames loaded = load_frames(c);
  data::FrameSet set = data::normalize(loaded.set, c.normalization);
  loaded.set = {};
  const data::FoldSplit split =
      c.subject_split ? data::split_kfold_by_subject(set, c.k, c.seed) : data::split_kfold(set, c.k, c.seed);

  std::optional<models::ModelSpec> spec;
  eval::FoldRunner runner;
  if (c.is_deep()) {
    spec = models::build(c.method, c.activation);
    spec->l2_coeff = c.l2_coeff;
    eval::DeepRunnerOptions opt{*spec, c.train, std::nullopt, c.normalization};
    if (c.checkpoints) opt.checkpoint_dir = c.output / "checkpoints";
    runner = eval::deep_runner(opt);
  } else {
    runner = eval::baseline_runner(*c.baseline_kind(), c.baseline, c.seed);
  }

  RunOutcome out;
  out.report = eval::cross_validate(c.method, runner, set, split, jobs);
  out.report.label = c.label;
  const auto table = eval::aggregate_report({out.report});
  out.results = {{"format", kResultsFormat},
                 {"manifest", decisions_manifest(c, spec ? &*spec : nullptr, split, loaded.info)},
                 {"report", eval::to_json(out.report)},
                 {"table", eval::to_json(table)}};

  std::filesystem::create_directories(c.output);
  const std::string name = slug(c.method);
  out.results_path = c.output / "results.json";
  eval::write_text(out.results_path, out.results.dump(2) + "\n");
  eval::write_text(c.output / ("roc_" + name + ".csv"), eval::roc_csv(out.report.pooled_roc.curve));
  eval::write_text(c.output / ("roc_" + name + ".svg"),
                   eval::svg_roc("ROC " + c.label + " (AUC " + eval::percent(out.report.pooled_roc.auc) + ")",
                                 out.report.pooled_roc.curve));
  if (!out.report.mean_curve.empty()) {
    eval::write_text(c.output / ("curves_" + name + ".csv"), eval::curves_csv(out.report.mean_curve));
    eval::write_text(c.output / ("curves_" + name + ".svg"),
                     eval::svg_curves("Learning curves " + c.label, out.report.mean_curve));
  }
  eval::write_text(c.output / "table.txt", eval::to_text(table));
  return out;
}

// ---- grid ----

struct GridRun {
  std::size_t index = 0;
  std::string label;
  std::optional<eval::MetricsReport> report;
  std::string error;
};

struct GridOutcome {
  std::vector<GridRun> runs;
  std::optional<eval::ResultsTable> table;
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : runs) n += !r.report;
    return n;
  }
};

// Grid file: {"runs": [config, ...], "output": dir} or a bare array of
// configs. Every run writes to <output>/runNN_<label>/; failures are
// recorded and the remaining runs continue.
inline GridOutcome run_grid(const json& grid, const std::filesystem::path& base_dir, const Overrides& o,
                            std::size_t jobs, std::ostream* progress = nullptr) {
  json runs;
  std::filesystem::path out_dir = "grid";
  if (grid.is_array()) {
    runs = grid;
  } else {
    config_detail::check_keys(grid, {"runs", "output"}, "grid");
    if (!grid.contains("runs") || !grid["runs"].is_array()) throw ParameterError("grid: 'runs' must be an array");
    runs = grid["runs"];
    if (grid.contains("output")) {
      out_dir = config_detail::get<std::string>(grid, "output", "grid");
      if (out_dir.is_relative() && !base_dir.empty()) out_dir = base_dir / out_dir;
    }
  }
  if (o.out) out_dir = *o.out;
  if (runs.empty()) throw ParameterError("grid: no runs");

  GridOutcome g;
  g.runs.resize(runs.size());
  std::mutex mu;
  auto run_one = [&](std::size_t i) {
    GridRun& r = g.runs[i];
    r.index = i;
    r.label = runs[i].is_object() && runs[i].contains("label") && runs[i]["label"].is_string()
                  ? runs[i]["label"].get<std::string>()
                  : runs[i].is_object() && runs[i].contains("method") && runs[i]["method"].is_string()
                        ? runs[i]["method"].get<std::string>()
                        : "run";
    try {
      ExperimentConfig c = parse_config(runs[i], base_dir);
      r.label = c.label;
      Overrides sub = o;
      char dir[16];
      std::snprintf(dir, sizeof dir, "run%02zu_", i + 1);
      sub.out = out_dir / (dir + slug(c.label));
      finalize(c, sub);
      r.report = run_experiment(c, 1).report;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    if (progress) {
      std::lock_guard lock(mu);
      *progress << "[" << i + 1 << "/" << runs.size() << "] " << r.label << ": "
                << (r.report ? eval::format_pm(r.report->accuracy) : "FAILED: " + r.error) << "\n";
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, runs.size());
  if (jobs == 1) {
    for (std::size_t i = 0; i < runs.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < runs.size(); i += jobs) run_one(i);
      });
    for (auto& t : workers) t.join();
  }

  std::vector<eval::MetricsReport> ok;
  json failures = json::array();
  for (const auto& r : g.runs) {
    if (r.report) ok.push_back(*r.report);
    else failures.push_back({{"run", r.index + 1}, {"label", r.label}, {"error", r.error}});
  }
  std::filesystem::create_directories(out_dir);
  json summary = {{"format", kResultsFormat}, {"runs", runs.size()}, {"failures", failures}};
  if (!ok.empty()) {
    g.table = eval::aggregate_report(ok);
    summary["table"] = eval::to_json(*g.table);
    eval::write_text(out_dir / "grid.txt", eval::to_text(*g.table));
    eval::write_text(out_dir / "grid.svg", eval::svg_grouped_bars("Grid results (%)", *g.table));
  }
  eval::write_text(out_dir / "grid.json", summary.dump(2) + "\n");
  return g;
}

// ---- report ----

// Accepts results.json files, run directories, or grid directories (whose
// run subdirectories are scanned in name order).
inline eval::ResultsTable collect_report(const std::vector<std::filesystem::path>& paths) {
  std::vector<eval::MetricsReport> reps;
  auto load = [&](const std::filesystem::path& p) {
    const json j = read_json_file(p, "report");
    if (!j.contains("report")) throw DataError("report: '" + p.string() + "' is not a results file");
    reps.push_back(eval::summary_from_json(j["report"]));
  };
  for (const auto& p : paths) {
    if (std::filesystem::is_directory(p)) {
      if (std::filesystem::exists(p / "results.json")) {
        load(p / "results.json");
        continue;
      }
      std::vector<std::filesystem::path> subs;
      for (const auto& e : std::filesystem::directory_iterator(p))
        if (e.is_directory() && std::filesystem::exists(e.path() / "results.json")) subs.push_back(e.path());
      std::sort(subs.begin(), subs.end());
      if (subs.empty()) throw DataError("report: no results.json under '" + p.string() + "'");
      for (const auto& s : subs) load(s / "results.json");
    } else {
      load(p);
    }
  }
  if (reps.empty()) throw ParameterError("report: no results given");
  return eval::aggregate_report(reps);
}

}  // namespace eegbench::experiment

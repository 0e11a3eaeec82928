#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "eegbench/data/folds.hpp"
#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/eval/metrics.hpp"
#include "eegbench/eval/roc.hpp"
#include "eegbench/models/train.hpp"

namespace eegbench::eval {

using data::FrameRefs;
using data::FrameSet;
using data::FoldSplit;

// What a trained fold model says about its test frames.
struct FoldOutput {
  std::vector<Label> labels;
  std::vector<double> scores;  // higher means more SZ-like
  std::vector<models::EpochStats> curve;
  std::vector<std::string> warnings;
};

// Trains on `train` and predicts `test`. Must not share mutable state
// between calls when folds run concurrently.
using FoldRunner = std::function<FoldOutput(const FrameRefs& train, const FrameRefs& test, std::size_t fold)>;

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::vector<std::size_t> test_indices;
  std::vector<Label> truth;
  FoldOutput output;
  ConfusionMatrix cm;
  Metrics metrics;
  double auc = 0.0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline Summary summarize(const std::vector<double>& v) {
  if (v.empty()) throw DataError("summarize: no values");
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) return {v[0], 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

// Fold-mean learning curve; validation entries are NaN when absent.
struct CurvePoint {
  std::size_t epoch = 0;
  double train_loss = 0.0, val_loss = 0.0, train_accuracy = 0.0, val_accuracy = 0.0;
};

struct MetricsReport {
  std::string method;
  std::string label;  // row name in tables; defaults to the method
  std::vector<FoldResult> folds;
  Summary accuracy, precision, recall, auc;
  RocResult pooled_roc;  // out-of-fold scores of all frames together
  std::vector<CurvePoint> mean_curve;
  std::size_t precision_undefined_folds = 0;
  std::size_t recall_undefined_folds = 0;
};

inline std::vector<CurvePoint> mean_curve(const std::vector<FoldResult>& folds) {
  std::size_t epochs = std::numeric_limits<std::size_t>::max();
  for (const auto& f : folds) epochs = std::min(epochs, f.output.curve.size());
  if (folds.empty() || epochs == 0) return {};
  std::vector<CurvePoint> out(epochs);
  const double k = static_cast<double>(folds.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    CurvePoint& p = out[e];
    p.epoch = e + 1;
    for (const auto& f : folds) {
      const auto& s = f.output.curve[e];
      p.train_loss += s.train_loss / k;
      p.val_loss += s.val_loss / k;
      p.train_accuracy += s.train_accuracy / k;
      p.val_accuracy += s.val_accuracy / k;
    }
  }
  return out;
}

inline void check_split(const FrameSet& set, const FoldSplit& split) {
  if (split.assignments.size() != set.size()) {
    throw ContractError("cross_validate: split covers " + std::to_string(split.assignments.size()) +
                        " frames, set has " + std::to_string(set.size()));
  }
  for (std::size_t a : split.assignments)
    if (a >= split.k) throw ContractError("cross_validate: fold id out of range");
}

// Folds run on up to `jobs` threads; the report does not depend on `jobs`.
inline MetricsReport cross_validate(std::string method, const FoldRunner& runner, const FrameSet& set,
                                    const FoldSplit& split, std::size_t jobs = 1) {
  check_split(set, split);
  std::vector<FoldResult> folds(split.k);
  for (std::size_t f = 0; f < split.k; ++f) {
    const auto train_idx = split.train_indices(f);
    const auto counts = data::class_counts(set.refs(train_idx));
    if (counts.sz == 0 || counts.hc == 0) {
      throw DataError("cross_validate: training partition of fold " + std::to_string(f + 1) +
                      " lacks a class (SZ " + std::to_string(counts.sz) + ", HC " + std::to_string(counts.hc) + ")");
    }
    folds[f].fold = f;
    folds[f].train_size = train_idx.size();
    folds[f].test_indices = split.test_indices(f);
    if (folds[f].test_indices.empty()) throw DataError("cross_validate: fold " + std::to_string(f + 1) + " is empty");
  }

  auto run_fold = [&](std::size_t f) {
    FoldResult& r = folds[f];
    const FrameRefs test = set.refs(r.test_indices);
    for (const auto* fr : test) r.truth.push_back(fr->label);
    r.output = runner(set.refs(split.train_indices(f)), test, f);
    if (r.output.labels.size() != test.size() || r.output.scores.size() != test.size()) {
      throw ContractError("cross_validate: fold " + std::to_string(f + 1) + " returned " +
                          std::to_string(r.output.labels.size()) + " labels and " +
                          std::to_string(r.output.scores.size()) + " scores for " +
                          std::to_string(test.size()) + " frames");
    }
    r.cm = confusion(r.output.labels, r.truth);
    r.metrics = metrics(r.cm);
    r.auc = roc_auc(r.output.scores, r.truth).auc;
  };
  jobs = std::clamp<std::size_t>(jobs, 1, split.k);
  if (jobs == 1) {
    for (std::size_t f = 0; f < split.k; ++f) run_fold(f);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t f = w; f < split.k; f += jobs) run_fold(f);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  MetricsReport rep;
  rep.method = std::move(method);
  rep.label = rep.method;
  std::vector<double> acc, prec, rec, auc;
  std::vector<double> pooled_scores(set.size());
  std::vector<Label> pooled_truth(set.size());
  for (const auto& r : folds) {
    acc.push_back(r.metrics.accuracy);
    prec.push_back(r.metrics.precision);
    rec.push_back(r.metrics.recall);
    auc.push_back(r.auc);
    rep.precision_undefined_folds += r.metrics.precision_undefined;
    rep.recall_undefined_folds += r.metrics.recall_undefined;
    for (std::size_t i = 0; i < r.test_indices.size(); ++i) {
      pooled_scores[r.test_indices[i]] = r.output.scores[i];
      pooled_truth[r.test_indices[i]] = r.truth[i];
    }
  }
  rep.accuracy = summarize(acc);
  rep.precision = summarize(prec);
  rep.recall = summarize(rec);
  rep.auc = summarize(auc);
  rep.pooled_roc = roc_auc(pooled_scores, pooled_truth);
  rep.folds = std::move(folds);
  rep.mean_curve = mean_curve(rep.folds);
  return rep;
}

}  // namespace eegbench::eval

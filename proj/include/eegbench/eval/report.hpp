#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "eegbench/baselines/baseline.hpp"
#include "eegbench/eval/cross_validate.hpp"
#include "eegbench/models/checkpoint.hpp"
#include "eegbench/models/spec.hpp"

namespace eegbench::eval {

using nlohmann::json;

// Percent with two decimals, e.g. (0.9925, 0.0025) -> "99.25 ± 0.25".
inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::round(v * 1e4) / 100.0);
  return buf;
}

inline std::string format_pm(const Summary& s) { return percent(s.mean) + " ± " + percent(s.std); }

// Baselines first, then the deep models, each in their catalogue order.
inline std::vector<std::string> declared_method_order() {
  std::vector<std::string> out;
  for (auto k : baselines::kBaselineKinds) out.emplace_back(baselines::to_string(k));
  for (auto n : models::kModelNames) out.emplace_back(n);
  return out;
}

inline std::size_t method_rank(const std::string& method) {
  const auto order = declared_method_order();
  const auto it = std::find(order.begin(), order.end(), method);
  return static_cast<std::size_t>(it - order.begin());
}

struct TableRow {
  std::string label;
  std::string method;
  Summary accuracy, precision, recall, auc;
};

struct ResultsTable {
  std::vector<TableRow> rows;
};

// Rows follow the declared method order; equal methods keep input order.
inline ResultsTable aggregate_report(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw ParameterError("aggregate_report: no reports");
  ResultsTable t;
  for (const auto& r : reports) t.rows.push_back({r.label, r.method, r.accuracy, r.precision, r.recall, r.auc});
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const TableRow& a, const TableRow& b) { return method_rank(a.method) < method_rank(b.method); });
  return t;
}

inline std::string to_text(const ResultsTable& t) {
  std::vector<std::vector<std::string>> cells{{"Method", "Acc", "Prec", "Rec", "AUC"}};
  for (const auto& r : t.rows)
    cells.push_back({r.label, format_pm(r.accuracy), format_pm(r.precision), format_pm(r.recall), format_pm(r.auc)});
  // Width in code points; the ± sign is two bytes.
  auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  };
  std::vector<std::size_t> w(5, 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < 5; ++c) w[c] = std::max(w[c], width(row[c]));
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 5; ++c) {
      out += row[c];
      if (c + 1 < 5) out += std::string(w[c] - width(row[c]) + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

inline json to_json(const Summary& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"formatted", format_pm(s)}};
}

inline json to_json(const ResultsTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"label", r.label},
                    {"method", r.method},
                    {"accuracy", to_json(r.accuracy)},
                    {"precision", to_json(r.precision)},
                    {"recall", to_json(r.recall)},
                    {"auc", to_json(r.auc)}});
  }
  return {{"std_convention", "population"}, {"rows", rows}};
}

inline json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

inline json to_json(const MetricsReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    json curve = json::array();
    for (const auto& e : f.output.curve) curve.push_back(models::to_json(e));
    folds.push_back({{"fold", f.fold + 1},
                     {"train_size", f.train_size},
                     {"test_size", f.test_indices.size()},
                     {"confusion", to_json(f.cm)},
                     {"accuracy", f.metrics.accuracy},
                     {"precision", f.metrics.precision},
                     {"recall", f.metrics.recall},
                     {"auc", f.auc},
                     {"precision_undefined", f.metrics.precision_undefined},
                     {"recall_undefined", f.metrics.recall_undefined},
                     {"warnings", f.output.warnings},
                     {"learning_curve", curve}});
  }
  return {{"method", r.method},
          {"label", r.label},
          {"folds", folds},
          {"aggregate",
           {{"accuracy", to_json(r.accuracy)},
            {"precision", to_json(r.precision)},
            {"recall", to_json(r.recall)},
            {"auc", to_json(r.auc)},
            {"pooled_auc", r.pooled_roc.auc},
            {"precision_undefined_folds", r.precision_undefined_folds},
            {"recall_undefined_folds", r.recall_undefined_folds}}}};
}

// Rebuilds the summary part of a report from results.json (for `report`).
inline MetricsReport summary_from_json(const json& j) {
  auto summary = [](const json& s) { return Summary{s.at("mean").get<double>(), s.at("std").get<double>()}; };
  MetricsReport r;
  r.method = j.at("method").get<std::string>();
  r.label = j.value("label", r.method);
  const json& a = j.at("aggregate");
  r.accuracy = summary(a.at("accuracy"));
  r.precision = summary(a.at("precision"));
  r.recall = summary(a.at("recall"));
  r.auc = summary(a.at("auc"));
  return r;
}

}  // namespace eegbench::eval

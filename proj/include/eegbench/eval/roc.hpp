#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"

namespace eegbench::eval {

using data::Label;

struct RocPoint {
  double threshold;  // score >= threshold counts as SZ; +inf for the origin
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

// Sweeps the unique scores in descending order. Equal scores form one step,
// so ties contribute a diagonal segment and count half in the area.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<Label>& truth) {
  if (scores.size() != truth.size()) {
    throw DimensionError("roc_auc: " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(truth.size()) + " labels");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw DataError("roc_auc: NaN score at index " + std::to_string(i));
    pos += truth[i] == Label::SZ;
  }
  const std::size_t neg = truth.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_auc: both classes are required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult r;
  r.curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double twice_area = 0.0;  // in units of one (positive, negative) pair
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::size_t tp0 = tp, fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) (truth[order[i]] == Label::SZ ? tp : fp) += 1;
    twice_area += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
    r.curve.points.push_back(
        {s, static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
  }
  r.auc = twice_area / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return r;
}

}  // namespace eegbench::eval

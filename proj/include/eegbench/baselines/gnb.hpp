#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "eegbench/baselines/features.hpp"

namespace eegbench::baselines {

struct GnbResult {
  Label label = Label::SZ;
  double sz_probability = 0.5;
};

// Gaussian naive Bayes. Per-class variances are floored at
// var_floor_ratio * (largest per-feature variance of the training set).
class GaussianNb {
 public:
  explicit GaussianNb(double var_floor_ratio = 1e-9) : floor_ratio_(var_floor_ratio) {
    if (!(var_floor_ratio > 0.0)) throw ParameterError("gnb: variance floor ratio must be positive");
  }

  void fit(const Samples& train) {
    require_training_set(train, "gnb");
    require_two_classes(train, "gnb");
    const std::size_t d = train.dim, n = train.size();
    for (int c = 0; c < 2; ++c) {
      mean_[c].assign(d, 0.0);
      var_[c].assign(d, 0.0);
      count_[c] = 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int c = class_index(train.labels[i]);
      ++count_[c];
      for (std::size_t j = 0; j < d; ++j) mean_[c][j] += train(i, j);
    }
    for (int c = 0; c < 2; ++c)
      for (auto& m : mean_[c]) m /= static_cast<double>(count_[c]);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = class_index(train.labels[i]);
      for (std::size_t j = 0; j < d; ++j) {
        const double r = train(i, j) - mean_[c][j];
        var_[c][j] += r * r;
      }
    }
    // Largest whole-set feature variance, from the class moments.
    double max_var = 0.0;
    const double nd = static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
      const double mu = (mean_[0][j] * count_[0] + mean_[1][j] * count_[1]) / nd;
      double v = var_[0][j] + var_[1][j];
      for (int c = 0; c < 2; ++c) v += count_[c] * (mean_[c][j] - mu) * (mean_[c][j] - mu);
      max_var = std::max(max_var, v / nd);
    }
    floor_ = floor_ratio_ * (max_var > 0.0 ? max_var : 1.0);
    for (int c = 0; c < 2; ++c) {
      for (auto& v : var_[c]) v = std::max(v / static_cast<double>(count_[c]), floor_);
      log_prior_[c] = std::log(static_cast<double>(count_[c]) / nd);
    }
  }

  // Joint log-likelihood log P(c) + sum_j log N(x_j; mean, var).
  double log_joint(const double* x, int c) const {
    double s = log_prior_[c];
    for (std::size_t j = 0; j < mean_[c].size(); ++j) {
      const double r = x[j] - mean_[c][j];
      s -= 0.5 * (std::log(2.0 * std::numbers::pi * var_[c][j]) + r * r / var_[c][j]);
    }
    return s;
  }

  GnbResult query(const double* x) const {
    const double sz = log_joint(x, 0), hc = log_joint(x, 1);
    return {sz >= hc ? Label::SZ : Label::HC, 1.0 / (1.0 + std::exp(hc - sz))};
  }

  std::vector<GnbResult> query(const Samples& q) const {
    if (mean_[0].empty()) throw ContractError("gnb: model is not fitted");
    require_dim(q, mean_[0].size(), "gnb");
    std::vector<GnbResult> out;
    for (const double* row : q.rows) out.push_back(query(row));
    return out;
  }

  double var_floor_ratio() const { return floor_ratio_; }
  double variance_floor() const { return floor_; }
  const std::vector<double>& mean(Label l) const { return mean_[class_index(l)]; }
  const std::vector<double>& variance(Label l) const { return var_[class_index(l)]; }
  std::size_t count(Label l) const { return count_[class_index(l)]; }

  // Restores a fitted state (deserialization).
  void set_state(std::array<std::vector<double>, 2> mean, std::array<std::vector<double>, 2> var,
                 std::array<std::size_t, 2> count, double floor) {
    if (mean[0].size() != mean[1].size() || var[0].size() != mean[0].size() || var[1].size() != mean[0].size())
      throw DataError("gnb: inconsistent class statistics");
    if (count[0] == 0 || count[1] == 0) throw DataError("gnb: class counts must be positive");
    for (int c = 0; c < 2; ++c) {
      mean_[c] = std::move(mean[c]);
      var_[c] = std::move(var[c]);
      count_[c] = count[c];
      log_prior_[c] = std::log(static_cast<double>(count[c]) / static_cast<double>(count[0] + count[1]));
    }
    floor_ = floor;
  }

 private:
  double floor_ratio_;
  double floor_ = 0.0;
  std::array<std::vector<double>, 2> mean_, var_;
  std::array<std::size_t, 2> count_{};
  std::array<double, 2> log_prior_{};
};

}  // namespace eegbench::baselines

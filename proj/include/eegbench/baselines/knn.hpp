#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "eegbench/baselines/features.hpp"

namespace eegbench::baselines {

struct KnnResult {
  Label label = Label::SZ;
  double sz_fraction = 0.0;
};

inline double squared_distance(const double* a, const double* b, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return (Eigen::Map<const Eigen::ArrayXd>(a, n) - Eigen::Map<const Eigen::ArrayXd>(b, n)).square().sum();
}

// Majority vote among the k nearest rows (Euclidean). A tied vote goes to the
// class with the smaller summed distance, then to SZ. Neighbours at equal
// distance are taken in training order.
//
// The model keeps pointers to the training rows, which must outlive it.
class Knn {
 public:
  explicit Knn(std::size_t k = 5) : k_(k) {
    if (k == 0) throw ParameterError("knn: k must be positive");
  }

  void fit(const Samples& train) {
    require_training_set(train, "knn");
    if (k_ > train.size())
      throw ParameterError("knn: k=" + std::to_string(k_) + " exceeds the " + std::to_string(train.size()) +
                           " training rows");
    train_ = train;
  }

  std::size_t k() const { return k_; }
  const Samples& training() const { return train_; }

  KnnResult query(const double* x) const {
    const std::size_t n = train_.size();
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = {squared_distance(train_.rows[i], x, train_.dim), i};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_), d.end());
    std::size_t votes[2] = {0, 0};
    double dist[2] = {0.0, 0.0};
    for (std::size_t j = 0; j < k_; ++j) {
      const int c = class_index(train_.labels[d[j].second]);
      ++votes[c];
      dist[c] += std::sqrt(d[j].first);
    }
    KnnResult r;
    r.sz_fraction = static_cast<double>(votes[0]) / static_cast<double>(k_);
    if (votes[0] != votes[1]) {
      r.label = votes[0] > votes[1] ? Label::SZ : Label::HC;
    } else {
      r.label = dist[1] < dist[0] ? Label::HC : Label::SZ;
    }
    return r;
  }

  std::vector<KnnResult> query(const Samples& q) const {
    if (train_.empty()) throw ContractError("knn: model is not fitted");
    require_dim(q, train_.dim, "knn");
    std::vector<KnnResult> out;
    out.reserve(q.size());
    for (const double* row : q.rows) out.push_back(query(row));
    return out;
  }

 private:
  std::size_t k_;
  Samples train_;
};

}  // namespace eegbench::baselines

#pragma once

#include <cmath>
#include <exception>
#include <string_view>
#include <thread>
#include <vector>

#include "eegbench/baselines/tree.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::baselines {

enum class EnsembleKind { bagging, rforest, etrees };

inline std::string_view to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::bagging: return "bagging";
    case EnsembleKind::rforest: return "rforest";
    case EnsembleKind::etrees: return "etrees";
  }
  return "?";
}

// Bootstrap sample of n row indices drawn with replacement.
inline std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.below(n);
  return idx;
}

// sqrt(d) candidate features per split, at least one.
inline std::size_t sqrt_features(std::size_t d) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
}

struct EnsembleResult {
  Label label = Label::SZ;
  double sz_fraction = 0.0;
};

// Tree ensembles with hard majority voting (ties to SZ).
//   bagging: bootstrap rows, every feature, best thresholds.
//   rforest: bootstrap rows, sqrt(d) random features per split.
//   etrees:  all rows, sqrt(d) random features, one random threshold each.
// Estimator e draws from Rng::derive(seed, e), so the fit does not depend on
// how estimators are spread over worker threads.
class Ensemble {
 public:
  Ensemble(EnsembleKind kind = EnsembleKind::bagging, std::size_t n_estimators = 100, std::uint64_t seed = 0)
      : kind_(kind), n_(n_estimators), seed_(seed) {
    if (n_estimators == 0) throw ParameterError("ensemble: n_estimators must be positive");
  }

  EnsembleKind kind() const { return kind_; }
  std::size_t n_estimators() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  TreeOptions tree_options(std::size_t dim) const {
    TreeOptions o;
    if (kind_ != EnsembleKind::bagging) o.max_features = sqrt_features(dim);
    o.random_thresholds = kind_ == EnsembleKind::etrees;
    return o;
  }

  void fit(const Samples& train, std::size_t jobs = 1) {
    require_training_set(train, "ensemble");
    trees_.assign(n_, DecisionTree{});
    auto fit_one = [&](std::size_t e) {
      Rng rng = Rng::derive(seed_, e);
      const TreeOptions opt = tree_options(train.dim);
      if (kind_ == EnsembleKind::etrees) {
        trees_[e].fit(train, opt, &rng);
      } else {
        const Samples boot = subset(train, bootstrap_indices(train.size(), rng));
        trees_[e].fit(boot, opt, &rng);
      }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, n_));
    if (jobs == 1) {
      for (std::size_t e = 0; e < n_; ++e) fit_one(e);
      return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t e = w; e < n_; e += jobs) fit_one(e);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  EnsembleResult query(const double* x) const {
    std::size_t sz = 0;
    for (const auto& t : trees_) sz += t.predict(x) == Label::SZ;
    const std::size_t hc = trees_.size() - sz;
    return {sz >= hc ? Label::SZ : Label::HC, static_cast<double>(sz) / static_cast<double>(trees_.size())};
  }

  std::vector<EnsembleResult> query(const Samples& q) const {
    if (trees_.empty()) throw ContractError("ensemble: model is not fitted");
    require_dim(q, trees_[0].dim(), "ensemble");
    std::vector<EnsembleResult> out;
    for (const double* row : q.rows) out.push_back(query(row));
    return out;
  }

  void set_trees(std::vector<DecisionTree> trees) {
    if (trees.empty()) throw DataError("ensemble: no estimators");
    n_ = trees.size();
    trees_ = std::move(trees);
  }

 private:
  EnsembleKind kind_;
  std::size_t n_;
  std::uint64_t seed_;
  std::vector<DecisionTree> trees_;
};

}  // namespace eegbench::baselines

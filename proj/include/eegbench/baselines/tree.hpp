#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "eegbench/baselines/features.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::baselines {

struct TreeOptions {
  std::size_t max_depth = 0;     // 0 = unlimited
  std::size_t min_split = 2;     // smallest node that may be split
  std::size_t max_features = 0;  // candidate features per split, 0 = all
  bool random_thresholds = false;  // one uniform threshold per candidate feature

  void validate() const {
    if (min_split < 2) throw ParameterError("tree: min_split must be at least 2");
  }
};

// Internal nodes send x[feature] <= threshold left. Every node keeps the class
// counts of the training rows that reached it; leaves have no children.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::size_t, 2> counts{};  // SZ, HC

  bool leaf() const { return left < 0; }
};

inline double gini(std::size_t sz, std::size_t hc) {
  const double n = static_cast<double>(sz + hc);
  if (n == 0.0) return 0.0;
  const double p = static_cast<double>(sz) / n, q = static_cast<double>(hc) / n;
  return 1.0 - p * p - q * q;
}

class DecisionTree {
 public:
  DecisionTree() = default;

  // CART with Gini impurity. `rng` is only drawn from when the options ask
  // for feature subsets or random thresholds.
  void fit(const Samples& train, const TreeOptions& opt = {}, Rng* rng = nullptr) {
    require_training_set(train, "tree");
    opt.validate();
    if ((opt.max_features != 0 && opt.max_features < train.dim) || opt.random_thresholds) {
      if (!rng) throw ContractError("tree: randomized splits need an rng");
    }
    dim_ = train.dim;
    nodes_.clear();
    std::vector<std::size_t> idx(train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Builder b{train, opt, rng, nodes_};
    b.grow(idx, 0, idx.size(), 0);
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t dim() const { return dim_; }

  const TreeNode& leaf_for(const double* x) const {
    if (nodes_.empty()) throw ContractError("tree: model is not fitted");
    const TreeNode* n = &nodes_[0];
    while (!n->leaf()) n = &nodes_[static_cast<std::size_t>(x[n->feature] <= n->threshold ? n->left : n->right)];
    return *n;
  }

  // Leaf majority, ties to SZ.
  Label predict(const double* x) const {
    const auto& c = leaf_for(x).counts;
    return c[0] >= c[1] ? Label::SZ : Label::HC;
  }

  double sz_probability(const double* x) const {
    const auto& c = leaf_for(x).counts;
    return static_cast<double>(c[0]) / static_cast<double>(c[0] + c[1]);
  }

  std::size_t depth() const { return nodes_.empty() ? 0 : depth_of(0); }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.leaf(); }));
  }

  // Restores a fitted tree (deserialization); checks the structure.
  void set_nodes(std::vector<TreeNode> nodes, std::size_t dim) {
    if (nodes.empty()) throw DataError("tree: no nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.counts[0] + n.counts[1] == 0) throw DataError("tree: node without training rows");
      if (n.leaf() != (n.right < 0)) throw DataError("tree: node with a single child");
      if (!n.leaf()) {
        if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= dim) throw DataError("tree: feature out of range");
        for (int c : {n.left, n.right})
          if (c <= static_cast<int>(i) || static_cast<std::size_t>(c) >= nodes.size())
            throw DataError("tree: child index out of order");
      }
    }
    nodes_ = std::move(nodes);
    dim_ = dim;
  }

 private:
  std::size_t depth_of(std::size_t i) const {
    const auto& n = nodes_[i];
    if (n.leaf()) return 0;
    return 1 + std::max(depth_of(static_cast<std::size_t>(n.left)), depth_of(static_cast<std::size_t>(n.right)));
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();

    // Lower weighted impurity wins; ties go to the lower feature index,
    // then the lower threshold.
    bool better_than(const Split& o) const {
      if (impurity != o.impurity) return impurity < o.impurity;
      if (feature != o.feature) return o.feature < 0 || feature < o.feature;
      return threshold < o.threshold;
    }
  };

  struct Builder {
    const Samples& data;
    const TreeOptions& opt;
    Rng* rng;
    std::vector<TreeNode>& nodes;
    std::vector<std::pair<double, int>> buf{};

    static double weighted(std::size_t lsz, std::size_t lhc, std::size_t rsz, std::size_t rhc) {
      const double nl = static_cast<double>(lsz + lhc), nr = static_cast<double>(rsz + rhc);
      return (nl * gini(lsz, lhc) + nr * gini(rsz, rhc)) / (nl + nr);
    }

    void load(const std::vector<std::size_t>& idx, std::size_t b, std::size_t e, std::size_t f) {
      buf.resize(e - b);
      for (std::size_t i = b; i < e; ++i) buf[i - b] = {data(idx[i], f), class_index(data.labels[idx[i]])};
    }

    // Best midpoint split on one feature; returns false if it is constant.
    bool exhaustive(const std::vector<std::size_t>& idx, std::size_t b, std::size_t e, std::size_t f,
                    std::array<std::size_t, 2> total, Split& best) {
      load(idx, b, e, f);
      std::sort(buf.begin(), buf.end());
      if (buf.front().first == buf.back().first) return false;
      std::array<std::size_t, 2> left{};
      for (std::size_t k = 1; k < buf.size(); ++k) {
        ++left[buf[k - 1].second];
        const double lo = buf[k - 1].first, hi = buf[k].first;
        if (lo == hi) continue;
        double thr = lo + (hi - lo) / 2.0;
        if (thr >= hi) thr = lo;
        Split s{static_cast<int>(f), thr, weighted(left[0], left[1], total[0] - left[0], total[1] - left[1])};
        if (s.better_than(best)) best = s;
      }
      return true;
    }

    bool randomized(const std::vector<std::size_t>& idx, std::size_t b, std::size_t e, std::size_t f,
                    std::array<std::size_t, 2> total, Split& best) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = b; i < e; ++i) {
        const double v = data(idx[i], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (lo == hi) return false;
      double thr = rng->uniform(lo, hi);
      if (thr >= hi) thr = lo;
      std::array<std::size_t, 2> left{};
      for (std::size_t i = b; i < e; ++i)
        if (data(idx[i], f) <= thr) ++left[class_index(data.labels[idx[i]])];
      Split s{static_cast<int>(f), thr, weighted(left[0], left[1], total[0] - left[0], total[1] - left[1])};
      if (s.better_than(best)) best = s;
      return true;
    }

    Split find(const std::vector<std::size_t>& idx, std::size_t b, std::size_t e, std::array<std::size_t, 2> total) {
      Split best;
      const std::size_t d = data.dim;
      auto eval = [&](std::size_t f) {
        return opt.random_thresholds ? randomized(idx, b, e, f, total, best) : exhaustive(idx, b, e, f, total, best);
      };
      if (opt.max_features == 0 || opt.max_features >= d) {
        if (!opt.random_thresholds) {
          for (std::size_t f = 0; f < d; ++f) eval(f);
          return best;
        }
      }
      // Features in random order; at least max_features non-constant ones are
      // examined, and the search continues past that until a split exists.
      const std::size_t want = opt.max_features == 0 ? d : std::min(opt.max_features, d);
      std::vector<std::size_t> order(d);
      for (std::size_t f = 0; f < d; ++f) order[f] = f;
      std::size_t examined = 0;
      for (std::size_t t = 0; t < d; ++t) {
        std::swap(order[t], order[t + rng->below(d - t)]);
        if (eval(order[t])) ++examined;
        if (examined >= want && best.feature >= 0) break;
      }
      return best;
    }

    int grow(std::vector<std::size_t>& idx, std::size_t b, std::size_t e, std::size_t depth) {
      TreeNode node;
      for (std::size_t i = b; i < e; ++i) ++node.counts[class_index(data.labels[idx[i]])];
      const int id = static_cast<int>(nodes.size());
      nodes.push_back(node);
      const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
      if (pure || e - b < opt.min_split || (opt.max_depth != 0 && depth >= opt.max_depth)) return id;
      const Split s = find(idx, b, e, node.counts);
      if (s.feature < 0) return id;  // every feature constant here
      const auto f = static_cast<std::size_t>(s.feature);
      auto mid = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(b),
                                       idx.begin() + static_cast<std::ptrdiff_t>(e),
                                       [&](std::size_t i) { return data(i, f) <= s.threshold; });
      const auto m = static_cast<std::size_t>(mid - idx.begin());
      nodes[static_cast<std::size_t>(id)].feature = s.feature;
      nodes[static_cast<std::size_t>(id)].threshold = s.threshold;
      const int l = grow(idx, b, m, depth + 1);
      const int r = grow(idx, m, e, depth + 1);
      nodes[static_cast<std::size_t>(id)].left = l;
      nodes[static_cast<std::size_t>(id)].right = r;
      return id;
    }
  };

  std::vector<TreeNode> nodes_;
  std::size_t dim_ = 0;
};

}  // namespace eegbench::baselines

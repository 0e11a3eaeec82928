#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eegbench/baselines/baseline.hpp"
#include "eegbench/log.hpp"
#include "eegbench/rng.hpp"

using namespace eegbench;
using namespace eegbench::baselines;

namespace {

struct Data {
  Tensor x;
  std::vector<Label> y;
  Samples s() const { return samples_from_matrix(x, y); }
};

Data make(std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<int> sz) {
  Data d{Tensor::matrix(rows), {}};
  for (int v : sz) d.y.push_back(v ? Label::SZ : Label::HC);
  return d;
}

Data random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Tensor({n, dim}), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) d.x.at(i, j) = rng.normal();
    d.y.push_back(rng.uniform() < 0.5 ? Label::SZ : Label::HC);
  }
  return d;
}

// Two blobs split by x + y = 0 with a margin.
Data separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Data d{Tensor({n, 2}), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const bool sz = i % 2 == 0;
    double a, b;
    do {
      a = rng.uniform(-3, 3);
      b = rng.uniform(-3, 3);
    } while (std::abs(a + b) < 0.5 || (a + b > 0) != sz);
    d.x.at(i, 0) = a;
    d.x.at(i, 1) = b;
    d.y.push_back(sz ? Label::SZ : Label::HC);
  }
  return d;
}

double accuracy(const std::vector<Prediction>& p, const std::vector<Label>& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += p[i].label == y[i];
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

// Exhaustive k-NN written independently: full sort of (distance, index).
Label knn_oracle(const Data& d, const double* q, std::size_t k) {
  const std::size_t n = d.x.dim(0), dim = d.x.dim(1);
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < dim; ++j) s += (d.x.at(i, j) - q[j]) * (d.x.at(i, j) - q[j]);
    all.push_back({s, i});
  }
  std::sort(all.begin(), all.end());
  int sz = 0, hc = 0;
  double dsz = 0, dhc = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (d.y[all[j].second] == Label::SZ) {
      ++sz;
      dsz += std::sqrt(all[j].first);
    } else {
      ++hc;
      dhc += std::sqrt(all[j].first);
    }
  }
  if (sz != hc) return sz > hc ? Label::SZ : Label::HC;
  return dhc < dsz ? Label::HC : Label::SZ;
}

}  // namespace

TEST(Knn, QueryAtTrainingPointWithKOne) {
  const Data d = random_points(30, 4, 1);
  Knn knn(1);
  knn.fit(d.s());
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(knn.query(d.x.data() + 4 * i).label, d.y[i]);
}

TEST(Knn, TiedVoteUsesSummedDistanceThenSz) {
  // k = n = 4, two of each class; HC points are closer to the query.
  const Data d = make({{0.0}, {5.0}, {1.0}, {2.0}}, {1, 1, 0, 0});
  Knn knn(4);
  knn.fit(d.s());
  const double q = 1.5;
  EXPECT_EQ(knn.query(&q).label, Label::HC);
  EXPECT_DOUBLE_EQ(knn.query(&q).sz_fraction, 0.5);
  // Symmetric layout: equal summed distances fall back to SZ.
  const Data sym = make({{-1.0}, {1.0}, {-2.0}, {2.0}}, {1, 0, 1, 0});
  Knn knn2(4);
  knn2.fit(sym.s());
  const double zero = 0.0;
  EXPECT_EQ(knn2.query(&zero).label, Label::SZ);
}

TEST(Knn, MatchesBruteForceOracle) {
  const Data train = random_points(200, 10, 2);
  const Data queries = random_points(50, 10, 3);
  Knn knn(5);
  knn.fit(train.s());
  const auto got = knn.query(queries.s());
  for (std::size_t i = 0; i < 50; ++i)
    EXPECT_EQ(got[i].label, knn_oracle(train, queries.x.data() + 10 * i, 5)) << "query " << i;
}

TEST(Knn, Errors) {
  EXPECT_THROW(Knn(0), ParameterError);
  Knn knn(5);
  EXPECT_THROW(knn.fit(Samples{}), DataError);
  EXPECT_THROW(knn.fit(random_points(3, 2, 4).s()), ParameterError);
  knn.fit(random_points(10, 2, 4).s());
  EXPECT_THROW(knn.query(random_points(2, 3, 5).s()), DimensionError);
}

TEST(GaussianNb, BoundaryNearMidpoint) {
  Rng rng(5);
  Data d{Tensor({4000, 1}), {}};
  for (std::size_t i = 0; i < 4000; ++i) {
    const bool sz = i % 2 == 0;
    d.x[i] = rng.normal(sz ? -2.0 : 2.0, 1.0);
    d.y.push_back(sz ? Label::SZ : Label::HC);
  }
  GaussianNb nb;
  nb.fit(d.s());
  double lo = -2.0, hi = 2.0;  // SZ at lo, HC at hi
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (nb.query(&mid).label == Label::SZ ? lo : hi) = mid;
  }
  EXPECT_NEAR(lo, 0.0, 0.1);
  const double mean_sz = -2.0, mean_hc = 2.0;
  EXPECT_EQ(nb.query(&mean_sz).label, Label::SZ);
  EXPECT_EQ(nb.query(&mean_hc).label, Label::HC);
  EXPECT_GT(nb.query(&mean_sz).sz_probability, 0.99);
}

TEST(GaussianNb, DuplicatedColumnsKeepTheDecision) {
  const Data one = random_points(60, 1, 6);
  Data two{Tensor({60, 2}), one.y};
  for (std::size_t i = 0; i < 60; ++i) two.x.at(i, 0) = two.x.at(i, 1) = one.x[i];
  GaussianNb a, b;
  a.fit(one.s());
  b.fit(two.s());
  Rng rng(7);
  for (int q = 0; q < 100; ++q) {
    const double v = rng.normal() * 3.0;
    const double vv[2] = {v, v};
    const double la = a.log_joint(&v, 0) - a.log_joint(&v, 1);
    const double lb = b.log_joint(vv, 0) - b.log_joint(vv, 1);
    const double prior = std::log(static_cast<double>(a.count(Label::SZ)) / static_cast<double>(a.count(Label::HC)));
    // Each likelihood term doubles; the prior term does not.
    EXPECT_NEAR(lb - prior, 2.0 * (la - prior), 1e-9);
    if (std::abs(prior) < 1e-12) EXPECT_EQ(a.query(&v).label, b.query(vv).label);
  }
}

TEST(GaussianNb, VarianceFloorAndErrors) {
  const Data d = make({{1.0, 0.0}, {1.0, 4.0}, {1.0, 1.0}, {1.0, 3.0}}, {1, 1, 0, 0});
  GaussianNb nb;
  nb.fit(d.s());
  // Column 0 is constant: floored at 1e-9 times the largest variance (2.5).
  EXPECT_DOUBLE_EQ(nb.variance_floor(), 1e-9 * 2.5);
  EXPECT_DOUBLE_EQ(nb.variance(Label::SZ)[0], 1e-9 * 2.5);
  EXPECT_DOUBLE_EQ(nb.variance(Label::SZ)[1], 4.0);
  EXPECT_THROW(nb.fit(make({{1.0}, {2.0}}, {1, 1}).s()), DataError);
}

TEST(DecisionTree, GiniValues) {
  EXPECT_DOUBLE_EQ(gini(5, 5), 0.5);
  EXPECT_DOUBLE_EQ(gini(4, 0), 0.0);
  EXPECT_DOUBLE_EQ(gini(1, 3), 0.375);
}

TEST(DecisionTree, PureSetIsOneLeaf) {
  DecisionTree t;
  t.fit(make({{1.0}, {2.0}, {3.0}}, {0, 0, 0}).s());
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_TRUE(t.nodes()[0].leaf());
  EXPECT_EQ(t.nodes()[0].counts[1], 3u);
}

TEST(DecisionTree, XorNeedsDepthTwo) {
  const Data d = make({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {1, 0, 0, 1});
  DecisionTree t;
  t.fit(d.s());
  EXPECT_EQ(t.depth(), 2u);
  EXPECT_EQ(t.leaf_count(), 4u);
  // Both root candidates leave Gini 0.5; the lower feature index wins.
  EXPECT_EQ(t.nodes()[0].feature, 0);
  EXPECT_DOUBLE_EQ(t.nodes()[0].threshold, 0.5);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(t.predict(d.x.data() + 2 * i), d.y[i]);
}

TEST(DecisionTree, RootSplitMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const Data d = random_points(25, 3, seed);
    DecisionTree t;
    t.fit(d.s());
    double best = 1e9;
    int bf = -1;
    double bt = 0;
    for (int f = 0; f < 3; ++f) {
      std::vector<double> v;
      for (std::size_t i = 0; i < 25; ++i) v.push_back(d.x.at(i, static_cast<std::size_t>(f)));
      std::sort(v.begin(), v.end());
      for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] == v[k - 1]) continue;
        const double thr = v[k - 1] + (v[k] - v[k - 1]) / 2;
        std::size_t l[2] = {0, 0}, r[2] = {0, 0};
        for (std::size_t i = 0; i < 25; ++i)
          (d.x.at(i, static_cast<std::size_t>(f)) <= thr ? l : r)[d.y[i] == Label::SZ ? 0 : 1]++;
        const double imp = ((l[0] + l[1]) * gini(l[0], l[1]) + (r[0] + r[1]) * gini(r[0], r[1])) / 25.0;
        if (imp < best) {
          best = imp;
          bf = f;
          bt = thr;
        }
      }
    }
    EXPECT_EQ(t.nodes()[0].feature, bf) << seed;
    EXPECT_DOUBLE_EQ(t.nodes()[0].threshold, bt) << seed;
  }
}

TEST(DecisionTree, FitsDistinctPointsExactlyAndRoundTrips) {
  const Data d = random_points(80, 5, 31);
  DecisionTree t;
  t.fit(d.s());
  for (std::size_t i = 0; i < 80; ++i) EXPECT_EQ(t.predict(d.x.data() + 5 * i), d.y[i]);
  for (const auto& n : t.nodes()) EXPECT_GT(n.counts[0] + n.counts[1], 0u);
  const DecisionTree back = tree_from_json(tree_to_json(t), 5);
  ASSERT_EQ(back.nodes().size(), t.nodes().size());
  for (std::size_t i = 0; i < 80; ++i) EXPECT_EQ(back.predict(d.x.data() + 5 * i), d.y[i]);
}

TEST(DecisionTree, DepthLimitAndMinSplit) {
  const Data d = random_points(80, 5, 32);
  DecisionTree t;
  TreeOptions o;
  o.max_depth = 2;
  t.fit(d.s(), o);
  EXPECT_LE(t.depth(), 2u);
  o = {};
  o.min_split = 100;
  t.fit(d.s(), o);
  EXPECT_EQ(t.nodes().size(), 1u);
  o.min_split = 1;
  EXPECT_THROW(t.fit(d.s(), o), ParameterError);
}

TEST(Ensemble, SeparableSetTrainsAccurately) {
  const Data d = separable(200, 40);
  for (auto kind : {BaselineKind::bagging, BaselineKind::rforest, BaselineKind::etrees}) {
    BaselineModel m(kind, {}, 3);
    m.fit(d.s());
    EXPECT_GE(accuracy(m.predict(d.s()), d.y), 0.95) << to_string(kind);
  }
}

TEST(Ensemble, SingleBaggedTreeIsCartOnItsBootstrap) {
  const Data d = random_points(60, 4, 41);
  Ensemble e(EnsembleKind::bagging, 1, 9);
  e.fit(d.s());
  Rng rng = Rng::derive(9, 0);
  DecisionTree t;
  t.fit(subset(d.s(), bootstrap_indices(60, rng)));
  ASSERT_EQ(e.trees()[0].nodes().size(), t.nodes().size());
  for (std::size_t i = 0; i < t.nodes().size(); ++i) {
    EXPECT_EQ(e.trees()[0].nodes()[i].feature, t.nodes()[i].feature);
    EXPECT_EQ(e.trees()[0].nodes()[i].threshold, t.nodes()[i].threshold);
    EXPECT_EQ(e.trees()[0].nodes()[i].counts, t.nodes()[i].counts);
  }
}

TEST(Ensemble, VoteIgnoresEstimatorOrderAndThreadCount) {
  const Data d = random_points(60, 6, 42);
  for (auto kind : {EnsembleKind::bagging, EnsembleKind::rforest, EnsembleKind::etrees}) {
    Ensemble a(kind, 15, 5), b(kind, 15, 5);
    a.fit(d.s(), 1);
    b.fit(d.s(), 4);
    for (std::size_t i = 0; i < 15; ++i)
      EXPECT_EQ(tree_to_json(a.trees()[i]), tree_to_json(b.trees()[i])) << to_string(kind);
    auto trees = a.trees();
    std::reverse(trees.begin(), trees.end());
    Ensemble c(kind, 15, 5);
    c.set_trees(trees);
    const Data q = random_points(40, 6, 43);
    const auto pa = a.query(q.s()), pc = c.query(q.s());
    for (std::size_t i = 0; i < 40; ++i) {
      EXPECT_EQ(pa[i].label, pc[i].label);
      EXPECT_EQ(pa[i].sz_fraction, pc[i].sz_fraction);
    }
  }
}

TEST(Ensemble, ExtraTreesUseEveryRowOnce) {
  const Data d = random_points(50, 3, 44);
  Ensemble e(EnsembleKind::etrees, 3, 1);
  e.fit(d.s());
  for (const auto& t : e.trees()) {
    EXPECT_EQ(t.nodes()[0].counts[0] + t.nodes()[0].counts[1], 50u);
  }
}

TEST(Svm, TwoPointsBoundaryAtMidpoint) {
  const Data d = make({{0.0, 0.0}, {2.0, 1.0}}, {1, 0});
  Svm svm;
  svm.fit(d.s());
  EXPECT_TRUE(svm.converged());
  EXPECT_EQ(svm.support().size(), 2u);
  const double mid[2] = {1.0, 0.5};
  EXPECT_LT(std::abs(svm.decision(mid)), 1e-6);
  EXPECT_EQ(svm.predict(d.x.data()), Label::SZ);
  EXPECT_EQ(svm.predict(d.x.data() + 2), Label::HC);
}

TEST(Svm, XorIsSeparableWithRbf) {
  const Data d = make({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {1, 1, 0, 0});
  BaselineModel m(BaselineKind::svm_rbf);
  m.fit(d.s());
  EXPECT_EQ(accuracy(m.predict(d.s()), d.y), 1.0);
  EXPECT_DOUBLE_EQ(m.state<Svm>().gamma(), 1.0 / (2 * 0.25));
}

// Independent dual solver: accelerated projected gradient. The projection onto
// {0 <= a <= C, y'a = 0} bisects on the multiplier of the equality.
std::vector<double> qp_oracle(const std::vector<double>& q, const std::vector<double>& y, double c) {
  const std::size_t n = y.size();
  auto project = [&](std::vector<double> v) {
    auto at = [&](double lam) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += y[i] * std::clamp(v[i] - lam * y[i], 0.0, c);
      return s;
    };
    double lo = -1e6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (at(mid) > 0 ? lo : hi) = mid;
    }
    const double lam = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - lam * y[i], 0.0, c);
    return v;
  };
  double lip = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(q[i * n + j]);
    lip = std::max(lip, row);
  }
  std::vector<double> a(n, 0.0), z = a, prev = a;
  double t = 1;
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> g(n, -1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i] += q[i * n + j] * z[j];
    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = z[i] - g[i] / lip;
    prev = a;
    a = project(step);
    const double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + (t - 1) / tn * (a[i] - prev[i]);
    t = tn;
  }
  return a;
}

TEST(Svm, AgreesWithDenseQpSolution) {
  Rng rng(50);
  Data d{Tensor({40, 2}), {}};
  for (std::size_t i = 0; i < 40; ++i) {
    const double a = rng.normal(), b = rng.normal();
    d.x.at(i, 0) = a;
    d.x.at(i, 1) = b;
    const bool sz = a * a + b + 0.4 * rng.normal() > 0.8;
    d.y.push_back(sz ? Label::SZ : Label::HC);
  }
  Svm svm;
  svm.fit(d.s());
  ASSERT_TRUE(svm.converged());

  const double gamma = svm.gamma(), c = 1.0;
  std::vector<double> y(40), q(1600), k(1600);
  for (std::size_t i = 0; i < 40; ++i) y[i] = d.y[i] == Label::SZ ? 1.0 : -1.0;
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) {
      const double dx = d.x.at(i, 0) - d.x.at(j, 0), dy = d.x.at(i, 1) - d.x.at(j, 1);
      k[i * 40 + j] = std::exp(-gamma * (dx * dx + dy * dy));
      q[i * 40 + j] = y[i] * y[j] * k[i * 40 + j];
    }
  const auto a = qp_oracle(q, y, c);
  double rho = 0;
  int free = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    if (a[i] > 1e-6 && a[i] < c - 1e-6) {
      double g = -1;
      for (std::size_t j = 0; j < 40; ++j) g += q[i * 40 + j] * a[j];
      rho += y[i] * g;
      ++free;
    }
  }
  ASSERT_GT(free, 0);
  rho /= free;
  int agree = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    double f = -rho;
    for (std::size_t j = 0; j < 40; ++j) f += a[j] * y[j] * k[i * 40 + j];
    agree += (f >= 0) == (svm.predict(d.x.data() + 2 * i) == Label::SZ);
  }
  EXPECT_GE(agree, 39);

  // Dual feasibility of the SMO solution.
  double balance = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_GE(svm.alpha()[i], 0.0);
    EXPECT_LE(svm.alpha()[i], c);
    balance += svm.alpha()[i] * y[i];
  }
  EXPECT_LT(std::abs(balance), 1e-6);
}

TEST(Svm, IterationCapReportsNonConvergence) {
  const Data d = random_points(60, 3, 51);
  log::ScopedCapture capture;
  BaselineParams p;
  p.svm_max_passes = 1;
  p.svm_tolerance = 1e-12;
  BaselineModel m(BaselineKind::svm_rbf, p);
  m.fit(d.s());
  EXPECT_FALSE(m.state<Svm>().converged());
  EXPECT_EQ(m.state<Svm>().iterations(), 60u);
  EXPECT_EQ(capture.messages().size(), 1u);
  EXPECT_EQ(m.warnings().size(), 1u);
  EXPECT_THROW(Svm(SvmOptions{0.0}), ParameterError);
  Svm one;
  EXPECT_THROW(one.fit(make({{1.0}, {2.0}}, {0, 0}).s()), DataError);
}

TEST(Baseline, KindNamesRoundTrip) {
  for (auto k : kBaselineKinds) EXPECT_EQ(parse_baseline_kind(to_string(k)), k);
  EXPECT_FALSE(parse_baseline_kind("svm"));
}

TEST(Baseline, JsonRoundTripReproducesPredictions) {
  const Data train = random_points(60, 4, 60);
  const Data q = random_points(30, 4, 61);
  BaselineParams p;
  p.n_estimators = 7;
  for (auto kind : kBaselineKinds) {
    BaselineModel m(kind, p, 12);
    m.fit(train.s());
    const Samples ts = train.s();
    const json j = to_json(m);
    const BaselineModel back = baseline_from_json(json::parse(j.dump()), &ts);
    EXPECT_EQ(to_json(back), j) << to_string(kind);
    const auto a = m.predict(q.s()), b = back.predict(q.s());
    for (std::size_t i = 0; i < 30; ++i) {
      EXPECT_EQ(a[i].label, b[i].label) << to_string(kind);
      EXPECT_EQ(a[i].score, b[i].score) << to_string(kind);
    }
  }
}

TEST(Baseline, DeterministicGivenSeed) {
  const Data train = random_points(50, 4, 62);
  BaselineParams p;
  p.n_estimators = 5;
  for (auto kind : kBaselineKinds) {
    BaselineModel a(kind, p, 3), b(kind, p, 3);
    a.fit(train.s());
    b.fit(train.s());
    EXPECT_EQ(to_json(a), to_json(b)) << to_string(kind);
  }
}

TEST(Baseline, UnfittedModelRejectsQueries) {
  BaselineModel m(BaselineKind::gnb);
  EXPECT_FALSE(m.fitted());
  EXPECT_THROW(m.predict(random_points(2, 2, 1).s()), ContractError);
}

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "eegbench/baselines/ensemble.hpp"
#include "eegbench/baselines/features.hpp"
#include "eegbench/baselines/gnb.hpp"
#include "eegbench/baselines/knn.hpp"
#include "eegbench/baselines/svm.hpp"
#include "eegbench/baselines/tree.hpp"

namespace eegbench::baselines {

using nlohmann::json;

enum class BaselineKind { knn, dtree, svm_rbf, gnb, bagging, rforest, etrees };

inline constexpr std::array<BaselineKind, 7> kBaselineKinds = {
    BaselineKind::knn,     BaselineKind::dtree,   BaselineKind::svm_rbf, BaselineKind::gnb,
    BaselineKind::bagging, BaselineKind::rforest, BaselineKind::etrees};

inline std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::knn: return "knn";
    case BaselineKind::dtree: return "dtree";
    case BaselineKind::svm_rbf: return "svm_rbf";
    case BaselineKind::gnb: return "gnb";
    case BaselineKind::bagging: return "bagging";
    case BaselineKind::rforest: return "rforest";
    case BaselineKind::etrees: return "etrees";
  }
  return "?";
}

inline std::optional<BaselineKind> parse_baseline_kind(std::string_view s) {
  for (auto k : kBaselineKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Library defaults unless overridden by the experiment config.
struct BaselineParams {
  std::size_t knn_k = 5;
  double svm_c = 1.0;
  double svm_gamma = 0.0;  // 0 = scale
  double svm_tolerance = 1e-3;
  std::size_t svm_max_passes = 10000;
  std::size_t tree_max_depth = 0;  // 0 = unlimited
  std::size_t tree_min_split = 2;
  std::size_t n_estimators = 100;
  double gnb_var_floor = 1e-9;
  std::size_t jobs = 1;  // ensemble fitting threads; does not affect results
};

inline json to_json(const BaselineParams& p, BaselineKind kind) {
  switch (kind) {
    case BaselineKind::knn: return {{"k", p.knn_k}, {"metric", "euclidean"}};
    case BaselineKind::svm_rbf:
      return {{"C", p.svm_c},
              {"kernel", "rbf"},
              {"gamma", p.svm_gamma > 0.0 ? json(p.svm_gamma) : json("scale")},
              {"tolerance", p.svm_tolerance},
              {"max_passes", p.svm_max_passes}};
    case BaselineKind::gnb: return {{"var_floor_ratio", p.gnb_var_floor}};
    case BaselineKind::dtree:
      return {{"criterion", "gini"},
              {"max_depth", p.tree_max_depth == 0 ? json(nullptr) : json(p.tree_max_depth)},
              {"min_split", p.tree_min_split}};
    case BaselineKind::bagging:
    case BaselineKind::rforest:
    case BaselineKind::etrees:
      return {{"criterion", "gini"},
              {"n_estimators", p.n_estimators},
              {"bootstrap", kind != BaselineKind::etrees},
              {"max_features", kind == BaselineKind::bagging ? "all" : "sqrt"},
              {"thresholds", kind == BaselineKind::etrees ? "random" : "best"},
              {"vote", "majority, ties to SZ"}};
  }
  return {};
}

// Label plus a ranking score for ROC analysis: SVM decision value, KNN SZ
// neighbour fraction, tree leaf SZ fraction, ensemble SZ vote fraction, GNB
// posterior P(SZ).
struct Prediction {
  Label label = Label::SZ;
  double score = 0.0;
};

class BaselineModel {
 public:
  BaselineModel(BaselineKind kind, BaselineParams params = {}, std::uint64_t seed = 0)
      : kind_(kind), params_(params), seed_(seed) {}

  BaselineKind kind() const { return kind_; }
  const BaselineParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  void fit(const Samples& train) {
    switch (kind_) {
      case BaselineKind::knn: {
        Knn m(params_.knn_k);
        m.fit(train);
        state_ = std::move(m);
        break;
      }
      case BaselineKind::gnb: {
        GaussianNb m(params_.gnb_var_floor);
        m.fit(train);
        state_ = std::move(m);
        break;
      }
      case BaselineKind::svm_rbf: {
        Svm m({params_.svm_c, params_.svm_gamma, params_.svm_tolerance, params_.svm_max_passes});
        m.fit(train);
        state_ = std::move(m);
        break;
      }
      case BaselineKind::dtree: {
        DecisionTree m;
        TreeOptions o;
        o.max_depth = params_.tree_max_depth;
        o.min_split = params_.tree_min_split;
        m.fit(train, o);
        state_ = std::move(m);
        break;
      }
      case BaselineKind::bagging:
      case BaselineKind::rforest:
      case BaselineKind::etrees: {
        const auto ek = kind_ == BaselineKind::bagging   ? EnsembleKind::bagging
                        : kind_ == BaselineKind::rforest ? EnsembleKind::rforest
                                                         : EnsembleKind::etrees;
        Ensemble m(ek, params_.n_estimators, seed_);
        m.fit(train, params_.jobs);
        state_ = std::move(m);
        break;
      }
    }
  }

  std::vector<Prediction> predict(const Samples& q) const {
    std::vector<Prediction> out;
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            throw ContractError("baseline: model is not fitted");
          } else if constexpr (std::is_same_v<T, Knn>) {
            for (const auto& r : m.query(q)) out.push_back({r.label, r.sz_fraction});
          } else if constexpr (std::is_same_v<T, GaussianNb>) {
            for (const auto& r : m.query(q)) out.push_back({r.label, r.sz_probability});
          } else if constexpr (std::is_same_v<T, Svm>) {
            for (double d : m.decision(q)) out.push_back({d >= 0.0 ? Label::SZ : Label::HC, d});
          } else if constexpr (std::is_same_v<T, DecisionTree>) {
            require_dim(q, m.dim(), "dtree");
            for (const double* row : q.rows) out.push_back({m.predict(row), m.sz_probability(row)});
          } else {
            for (const auto& r : m.query(q)) out.push_back({r.label, r.sz_fraction});
          }
        },
        state_);
    return out;
  }

  // Diagnostics worth surfacing in a report (currently SVM non-convergence).
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (const auto* s = std::get_if<Svm>(&state_); s && !s->converged())
      w.push_back("svm: iteration cap reached before the KKT tolerance");
    return w;
  }

  template <typename T>
  const T& state() const {
    return std::get<T>(state_);
  }

  using State = std::variant<std::monostate, Knn, GaussianNb, Svm, DecisionTree, Ensemble>;
  void set_state(State s) { state_ = std::move(s); }
  bool fitted() const { return !std::holds_alternative<std::monostate>(state_); }

 private:
  BaselineKind kind_;
  BaselineParams params_;
  std::uint64_t seed_;
  State state_;
};

// ---- serialization ----
// Trees are nested nodes; the SVM stores support indices, dual coefficients
// and rho; KNN stores k. KNN and SVM refer to rows of the training set, which
// must be supplied again when loading.

inline json tree_to_json(const DecisionTree& t, std::size_t i = 0) {
  const TreeNode& n = t.nodes().at(i);
  json j{{"counts", {n.counts[0], n.counts[1]}}};
  if (!n.leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = tree_to_json(t, static_cast<std::size_t>(n.left));
    j["right"] = tree_to_json(t, static_cast<std::size_t>(n.right));
  }
  return j;
}

namespace detail {
inline int tree_nodes_from_json(const json& j, std::vector<TreeNode>& out) {
  TreeNode n;
  n.counts = {j.at("counts").at(0).get<std::size_t>(), j.at("counts").at(1).get<std::size_t>()};
  const int id = static_cast<int>(out.size());
  out.push_back(n);
  if (j.contains("left")) {
    out[static_cast<std::size_t>(id)].feature = j.at("feature").get<int>();
    out[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
    const int l = tree_nodes_from_json(j.at("left"), out);
    const int r = tree_nodes_from_json(j.at("right"), out);
    out[static_cast<std::size_t>(id)].left = l;
    out[static_cast<std::size_t>(id)].right = r;
  }
  return id;
}
}  // namespace detail

inline DecisionTree tree_from_json(const json& j, std::size_t dim) {
  std::vector<TreeNode> nodes;
  detail::tree_nodes_from_json(j, nodes);
  DecisionTree t;
  t.set_nodes(std::move(nodes), dim);
  return t;
}

inline json to_json(const BaselineModel& m) {
  json j{{"kind", to_string(m.kind())}, {"seed", m.seed()}, {"hyperparameters", to_json(m.params(), m.kind())}};
  switch (m.kind()) {
    case BaselineKind::knn: {
      const auto& k = m.state<Knn>();
      j["training_rows"] = k.training().size();
      j["dim"] = k.training().dim;
      break;
    }
    case BaselineKind::gnb: {
      const auto& g = m.state<GaussianNb>();
      j["dim"] = g.mean(Label::SZ).size();
      j["variance_floor"] = g.variance_floor();
      for (Label l : {Label::SZ, Label::HC}) {
        j["classes"][std::string(data::to_string(l))] = {
            {"count", g.count(l)}, {"mean", g.mean(l)}, {"variance", g.variance(l)}};
      }
      break;
    }
    case BaselineKind::svm_rbf: {
      const auto& s = m.state<Svm>();
      j["gamma_value"] = s.gamma();
      j["support"] = s.support();
      j["dual_coef"] = s.dual_coef();
      j["rho"] = s.rho();
      j["converged"] = s.converged();
      j["iterations"] = s.iterations();
      break;
    }
    case BaselineKind::dtree: {
      const auto& t = m.state<DecisionTree>();
      j["dim"] = t.dim();
      j["tree"] = tree_to_json(t);
      break;
    }
    default: {
      const auto& e = m.state<Ensemble>();
      j["dim"] = e.trees().front().dim();
      json trees = json::array();
      for (const auto& t : e.trees()) trees.push_back(tree_to_json(t));
      j["trees"] = std::move(trees);
      break;
    }
  }
  return j;
}

inline BaselineModel baseline_from_json(const json& j, const Samples* train = nullptr) {
  const auto kind = parse_baseline_kind(j.at("kind").get<std::string>());
  if (!kind) throw DataError("baseline: unknown kind");
  BaselineParams p;
  const json& h = j.at("hyperparameters");
  auto need_train = [&](const char* who) -> const Samples& {
    if (!train) throw ContractError(std::string(who) + ": loading needs the training rows");
    return *train;
  };
  BaselineModel m(*kind, p, j.value("seed", std::uint64_t{0}));
  switch (*kind) {
    case BaselineKind::knn: {
      p.knn_k = h.at("k").get<std::size_t>();
      const Samples& t = need_train("knn");
      if (t.size() != j.at("training_rows").get<std::size_t>()) throw DataError("knn: training row count differs");
      Knn k(p.knn_k);
      k.fit(t);
      m = BaselineModel(*kind, p, m.seed());
      m.set_state(std::move(k));
      break;
    }
    case BaselineKind::gnb: {
      p.gnb_var_floor = h.at("var_floor_ratio").get<double>();
      GaussianNb g(p.gnb_var_floor);
      const json& c = j.at("classes");
      g.set_state({c.at("SZ").at("mean").get<std::vector<double>>(), c.at("HC").at("mean").get<std::vector<double>>()},
                  {c.at("SZ").at("variance").get<std::vector<double>>(),
                   c.at("HC").at("variance").get<std::vector<double>>()},
                  {c.at("SZ").at("count").get<std::size_t>(), c.at("HC").at("count").get<std::size_t>()},
                  j.at("variance_floor").get<double>());
      m = BaselineModel(*kind, p, m.seed());
      m.set_state(std::move(g));
      break;
    }
    case BaselineKind::svm_rbf: {
      p.svm_c = h.at("C").get<double>();
      p.svm_gamma = h.at("gamma").is_string() ? 0.0 : h.at("gamma").get<double>();
      p.svm_tolerance = h.at("tolerance").get<double>();
      p.svm_max_passes = h.at("max_passes").get<std::size_t>();
      Svm s({p.svm_c, p.svm_gamma, p.svm_tolerance, p.svm_max_passes});
      s.set_state(need_train("svm"), j.at("support").get<std::vector<std::size_t>>(),
                  j.at("dual_coef").get<std::vector<double>>(), j.at("rho").get<double>(),
                  j.at("gamma_value").get<double>(), j.at("converged").get<bool>(),
                  j.at("iterations").get<std::size_t>());
      m = BaselineModel(*kind, p, m.seed());
      m.set_state(std::move(s));
      break;
    }
    case BaselineKind::dtree: {
      p.tree_max_depth = h.at("max_depth").is_null() ? 0 : h.at("max_depth").get<std::size_t>();
      p.tree_min_split = h.at("min_split").get<std::size_t>();
      m = BaselineModel(*kind, p, m.seed());
      m.set_state(tree_from_json(j.at("tree"), j.at("dim").get<std::size_t>()));
      break;
    }
    default: {
      p.n_estimators = h.at("n_estimators").get<std::size_t>();
      const auto ek = *kind == BaselineKind::bagging   ? EnsembleKind::bagging
                      : *kind == BaselineKind::rforest ? EnsembleKind::rforest
                                                       : EnsembleKind::etrees;
      Ensemble e(ek, p.n_estimators, m.seed());
      std::vector<DecisionTree> trees;
      for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t, j.at("dim").get<std::size_t>()));
      e.set_trees(std::move(trees));
      m = BaselineModel(*kind, p, m.seed());
      m.set_state(std::move(e));
      break;
    }
  }
  return m;
}

}  // namespace eegbench::baselines

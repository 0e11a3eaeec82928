// Acceptance suite: one PASS/FAIL line per criterion.
//
//   eegbench_acceptance [criterion ...] [--reduced]
//
// With no arguments every criterion runs. Criterion 6 needs the public
// dataset under $EEGBENCH_DATASET_ROOT and reports SKIP without it.
// Exit status: 0 all selected passed, 1 any failed, 77 skipped only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "eegbench/baselines/knn.hpp"
#include "eegbench/data/preprocess.hpp"
#include "eegbench/eval/metrics.hpp"
#include "eegbench/eval/roc.hpp"
#include "eegbench/experiment/config.hpp"
#include "eegbench/experiment/run.hpp"
#include "eegbench/log.hpp"
#include "eegbench/models/network.hpp"
#include "support/golden_tables.hpp"
#include "support/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace eegbench;
using data::Label;
using nn::Shape;
using nn::Tensor;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool g_reduced = false;

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("eegbench_acceptance_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 1. Central finite differences on every layer and loss.
Outcome gradients() {
  Clock clock;
  double worst = 0.0;
  std::string worst_case;
  std::size_t coords = 0, cases = 0;
  for (const auto& c : testing::layer_grad_cases()) {
    const auto r = testing::check_gradients(c, 20, 20240 + cases, 1e-5);
    ++cases;
    coords += r.coordinates_checked;
    if (r.worst_relative_error >= worst) {
      worst = r.worst_relative_error;
      worst_case = c.name;
    }
  }
  const double t = clock.seconds();
  const bool ok = worst < 1e-4 && t < 60.0 && coords > 0;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%zu ops, %zu coordinates, worst relative error %.2e (%s), %.1f s; need < 1e-4 and < 60 s", cases,
              coords, worst, worst_case.c_str(), t)};
}

// 2. KNN, AUC and confusion counts against independent oracles.
Outcome oracles() {
  Clock clock;
  Rng rng(77);
  std::vector<std::string> problems;

  // KNN: brute-force ranking of all training points per query.
  const std::size_t n = 200, dim = 10, k = 5;
  std::vector<double> train(n * dim), query(50 * dim);
  std::vector<Label> labels(n);
  for (double& v : train) v = rng.normal(0.0, 1.0);
  for (double& v : query) v = rng.normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) labels[i] = rng.uniform(0.0, 1.0) < 0.5 ? Label::SZ : Label::HC;
  baselines::Samples s;
  s.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    s.rows.push_back(train.data() + i * dim);
    s.labels.push_back(labels[i]);
  }
  baselines::Knn knn(k);
  knn.fit(s);
  std::size_t knn_match = 0;
  for (std::size_t q = 0; q < 50; ++q) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = train[i * dim + j] - query[q * dim + j];
        acc += diff * diff;
      }
      d.push_back({acc, i});
    }
    std::sort(d.begin(), d.end());
    std::size_t sz = 0;
    for (std::size_t j = 0; j < k; ++j) sz += labels[d[j].second] == Label::SZ;
    const Label expect = 2 * sz > k ? Label::SZ : Label::HC;
    const auto got = knn.query(query.data() + q * dim);
    knn_match += got.label == expect && got.sz_fraction == static_cast<double>(sz) / k;
  }
  if (knn_match != 50) problems.push_back(fmt("knn %zu/50", knn_match));

  // AUC: trapezoid sweep vs Mann-Whitney pair counting.
  double worst_auc = 0.0;
  for (int set = 0; set < 100; ++set) {
    const std::size_t m = 20 + static_cast<std::size_t>(rng.uniform(0.0, 200.0));
    std::vector<double> scores(m);
    std::vector<Label> truth(m);
    for (std::size_t i = 0; i < m; ++i) {
      truth[i] = i % 3 == 0 ? Label::SZ : Label::HC;
      if (i < 2) truth[i] = i == 0 ? Label::SZ : Label::HC;
      scores[i] = set % 2 ? std::round(rng.uniform(0.0, 8.0)) / 8.0 : rng.uniform(0.0, 1.0);
    }
    double wins = 0.0, pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      (truth[i] == Label::SZ ? pos : neg) += 1.0;
      if (truth[i] != Label::SZ) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (truth[j] == Label::SZ) continue;
        wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
    }
    worst_auc = std::max(worst_auc, std::abs(eval::roc_auc(scores, truth).auc - wins / (pos * neg)));
  }
  if (!(worst_auc < 1e-9)) problems.push_back(fmt("auc |delta| %.2e", worst_auc));

  // Confusion counts vs a direct tally.
  std::size_t cm_match = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform(0.0, 100.0));
    std::vector<Label> p(m), t(m);
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = rng.uniform(0.0, 1.0) < 0.5 ? Label::SZ : Label::HC;
      t[i] = rng.uniform(0.0, 1.0) < 0.5 ? Label::SZ : Label::HC;
      if (p[i] == Label::SZ) (t[i] == Label::SZ ? tp : fp)++;
      else (t[i] == Label::HC ? tn : fn)++;
    }
    const auto cm = eval::confusion(p, t);
    const auto mt = eval::metrics(cm);
    const bool counts = cm.tp == tp && cm.fp == fp && cm.tn == tn && cm.fn == fn;
    const bool acc = mt.accuracy == static_cast<double>(tp + tn) / static_cast<double>(m);
    cm_match += counts && acc;
  }
  if (cm_match != 100) problems.push_back(fmt("confusion %zu/100", cm_match));

  const double t = clock.seconds();
  if (t >= 60.0) problems.push_back(fmt("runtime %.1f s", t));
  std::string detail = fmt("knn %zu/50 exact, auc worst |delta| %.2e over 100 sets, confusion %zu/100 exact, %.1f s",
                           knn_match, worst_auc, cm_match, t);
  for (const auto& p : problems) detail += "; off: " + p;
  return {problems.empty() ? Verdict::pass : Verdict::fail, detail};
}

// 3. Built architectures rendered back to table cells.
Outcome architectures() {
  std::size_t rows = 0;
  std::vector<std::string> problems;
  for (const auto& table : testing::golden_tables()) {
    const auto m = models::build(table.model, nn::Activation::relu);
    const auto got = testing::render(m);
    if (got.size() != table.rows.size()) {
      problems.push_back(fmt("%s has %zu rows, table %zu", table.model.c_str(), got.size(), table.rows.size()));
      continue;
    }
    for (std::size_t r = 0; r < got.size(); ++r) {
      if (got[r] != table.rows[r]) problems.push_back(fmt("%s row %zu", table.model.c_str(), r + 1));
      ++rows;
    }
  }
  const std::size_t cl2 = models::build("CNN-LSTM-2", nn::Activation::relu).layers.size();
  if (cl2 != 13) problems.push_back(fmt("CNN-LSTM-2 has %zu layers", cl2));
  std::string detail = fmt("%zu models, %zu rows compared, CNN-LSTM-2 layers %zu", testing::golden_tables().size(),
                           rows, cl2);
  for (const auto& p : problems) detail += "; mismatch: " + p;
  return {problems.empty() && testing::golden_tables().size() == 7 ? Verdict::pass : Verdict::fail, detail};
}

// 4. Normalization invariants and the 36-frame segmentation.
Outcome preprocessing() {
  Rng rng(4);
  double worst_mean = 0.0, worst_std = 0.0, worst_norm = 0.0;
  std::size_t frames = 0;
  for (int r = 0; r < 200; ++r) {
    data::RawRecording rec;
    rec.subject_id = "r" + std::to_string(r);
    rec.channel_names = data::montage_names();
    const std::size_t len = 6250 * (1 + r % 2) + static_cast<std::size_t>(rng.uniform(0.0, 3000.0));
    rec.samples = Tensor({len, data::kChannelCount});
    for (std::size_t c = 0; c < data::kChannelCount; ++c) {
      const double offset = rng.uniform(-200.0, 200.0), scale = rng.uniform(0.5, 80.0);
      for (std::size_t t = 0; t < len; ++t) rec.samples.at(t, c) = offset + scale * rng.normal(0.0, 1.0);
    }
    for (const auto& raw : data::segment(rec)) {
      ++frames;
      const auto z = data::normalize(raw, data::Normalization::zscore);
      const auto zl = data::normalize(raw, data::Normalization::zscore_l2);
      const std::size_t n = z.length();
      for (std::size_t c = 0; c < data::kChannelCount; ++c) {
        double mean = 0.0, ss = 0.0, norm = 0.0;
        for (std::size_t t = 0; t < n; ++t) mean += z.data.at(t, c);
        mean /= static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
          ss += (z.data.at(t, c) - mean) * (z.data.at(t, c) - mean);
          norm += zl.data.at(t, c) * zl.data.at(t, c);
        }
        worst_mean = std::max(worst_mean, std::abs(mean));
        worst_std = std::max(worst_std, std::abs(std::sqrt(ss / static_cast<double>(n)) - 1.0));
        worst_norm = std::max(worst_norm, std::abs(std::sqrt(norm) - 1.0));
      }
    }
  }
  data::RawRecording fifteen;
  fifteen.subject_id = "long";
  fifteen.channel_names = data::montage_names();
  fifteen.samples = Tensor({225000, data::kChannelCount});
  for (double& v : fifteen.samples.storage()) v = rng.normal(0.0, 10.0);
  const std::size_t segments = data::segment(fifteen).size();
  const bool ok = worst_mean < 1e-9 && worst_std < 1e-6 && worst_norm < 1e-9 && segments == 36;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%zu frames from 200 recordings: |mean| %.1e, |std-1| %.1e, |norm-1| %.1e; 225000 samples -> %zu frames",
              frames, worst_mean, worst_std, worst_norm, segments)};
}

fs::path config_dir() { return fs::path(EEGBENCH_SOURCE_DIR) / "configs"; }

// 5. Synthetic two-class data through the full cross-validated pipeline.
Outcome synthetic_end_to_end() {
  Clock clock;
  auto c = experiment::load_config(config_dir() / "synthetic_cnn_lstm2.json");
  experiment::Overrides o;
  o.out = scratch_dir("synthetic");
  experiment::finalize(c, o);
  const auto run = experiment::run_experiment(c, 1);
  const double t = clock.seconds();
  std::string folds;
  for (const auto& f : run.report.folds) folds += fmt(" %.3f", f.metrics.accuracy);
  fs::remove_all(*o.out);
  const double acc = run.report.accuracy.mean;
  const bool ok = acc >= 0.95 && t < 900.0;
  return {ok ? Verdict::pass : Verdict::fail,
          fmt("%s: 5-fold mean accuracy %.4f (folds%s), %.0f s; need >= 0.95 and < 900 s", c.method.c_str(), acc,
              folds.c_str(), t)};
}

// 6. Real-data reproduction; needs the public dataset.
Outcome real_data() {
  const char* root = std::getenv(experiment::kDatasetRootEnv);
  if (!root || !*root || !fs::exists(fs::path(root) / "manifest.json")) {
    return {Verdict::skip, std::string("dataset not present (set ") + experiment::kDatasetRootEnv +
                               " to a directory with manifest.json and the subject files)"};
  }
  Clock clock;
  experiment::Overrides o;
  o.reduced = g_reduced;
  const fs::path out = fs::current_path() / "acceptance_real_data";
  auto run = [&](const std::string& file) {
    auto c = experiment::load_config(config_dir() / file);
    o.out = out / fs::path(file).stem();
    experiment::finalize(c, o);
    return experiment::run_experiment(c, 1).report;
  };
  const auto deep = run("cnn_lstm2.json");
  const auto bag = run("bagging.json");
  const double need = g_reduced ? 0.85 : 0.94;
  const bool deep_ok = deep.accuracy.mean >= need;
  const bool bag_ok = std::abs(100.0 * bag.accuracy.mean - 81.22) <= 10.0;
  return {deep_ok && bag_ok ? Verdict::pass : Verdict::fail,
          fmt("%sCNN-LSTM-2 accuracy %s (need >= %.2f), bagging %s (need 81.22 +/- 10), %.0f s; results in %s",
              g_reduced ? "reduced: " : "", eval::format_pm(deep.accuracy).c_str(), need,
              eval::format_pm(bag.accuracy).c_str(), clock.seconds(), out.string().c_str())};
}

// 7. Repeated CLI runs give byte-identical results.json.
Outcome determinism() {
  const fs::path dir = scratch_dir("determinism");
  std::size_t same = 0, total = 0;
  std::vector<std::string> problems;
  for (std::string method : {"knn", "dtree", "svm_rbf", "gnb", "bagging", "rforest", "etrees", "CNN-1", "CNN-2",
                             "CNN-3", "LSTM-1", "LSTM-2", "CNN-LSTM-1", "CNN-LSTM-2"}) {
    const experiment::json cfg = {
        {"method", method},
        {"normalization", "zscore_l2"},
        {"synthetic", {{"frames", 30}, {"frame_len", 40}, {"channels", 3}, {"burst_seconds", 0.08}}},
        {"train", {{"epochs", 2}, {"batch_size", 8}}},
        {"baseline", {{"n_estimators", 3}}},
        {"seed", 11}};
    const fs::path cfg_path = dir / (method + ".json");
    std::ofstream(cfg_path) << cfg.dump();
    std::string first;
    for (int rep = 0; rep < 3; ++rep) {
      const fs::path out = dir / (method + "_" + std::to_string(rep));
      const std::string cmd = std::string("\"") + EEGBENCH_CLI + "\" run --config \"" + cfg_path.string() +
                              "\" --out \"" + out.string() + "\"" + (rep == 2 ? " --jobs 3" : "") +
                              " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        problems.push_back(method + " run failed");
        break;
      }
      const std::string text = slurp(out / "results.json");
      if (rep == 0) first = text;
      else {
        ++total;
        if (!text.empty() && text == first) ++same;
        else problems.push_back(method + " rep " + std::to_string(rep) + " differs");
      }
    }
  }
  fs::remove_all(dir);
  std::string detail = fmt("%zu/%zu repeated runs byte-identical over 14 methods (second run with --jobs 3)", same,
                           total);
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty() && same == 28 ? Verdict::pass : Verdict::fail, detail};
}

// Closed-form output length of each layer, written from the layer algebra
// rather than from shape_trace.
std::vector<Shape> closed_form(const models::ModelSpec& m, std::size_t time, std::size_t channels) {
  std::vector<Shape> out;
  std::size_t t = time, f = channels;
  bool seq = true;
  std::size_t flat = 0;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& l = m.layers[i];
    using K = models::LayerKind;
    switch (l.kind) {
      case K::input:
      case K::dropout: break;
      case K::conv1d:
        t = (t - l.kernel) / l.stride + 1;
        f = l.filters;
        break;
      case K::maxpool1d: t = (t - l.kernel) / l.stride + 1; break;
      case K::flatten:
        if (i + 1 < m.layers.size() && m.layers[i + 1].kind == K::lstm) break;
        flat = t * f;
        seq = false;
        break;
      case K::lstm:
        f = l.units;
        if (!l.return_sequence) {
          flat = l.units;
          seq = false;
        }
        break;
      case K::dense:
        flat = l.units;
        seq = false;
        break;
    }
    out.push_back(seq ? Shape{t, f} : Shape{flat});
  }
  return out;
}

// 8. Full-frame forward passes match the closed-form shapes layer by layer.
Outcome shapes() {
  Clock clock;
  std::vector<std::string> problems;
  std::size_t layers = 0;
  Rng rng(8);
  Tensor frame({1, data::kFrameLength, data::kChannelCount});
  for (double& v : frame.storage()) v = rng.normal(0.0, 0.01);
  for (auto name : models::kModelNames) {
    try {
      const auto spec = models::build(name, nn::Activation::relu);
      models::Network net(spec, {data::kFrameLength, data::kChannelCount}, 1);
      nn::Graph g(false);
      std::vector<Shape> observed;
      const Tensor y = net.forward(g, g.constant(frame), nn::Mode::eval, {}, nullptr, false, &observed).value();
      const auto expect = closed_form(spec, data::kFrameLength, data::kChannelCount);
      if (observed != expect || net.shape_trace() != expect) problems.push_back(std::string(name) + " shapes");
      if (y.size() != spec.output_units() || !std::isfinite(y[0])) problems.push_back(std::string(name) + " output");
      layers += observed.size();
    } catch (const std::exception& e) {
      problems.push_back(std::string(name) + ": " + e.what());
    }
  }
  std::string detail = fmt("7 models on a 6250x19 frame, %zu layer outputs checked, %.1f s", layers, clock.seconds());
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty() ? Verdict::pass : Verdict::fail, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  log::set_warning_sink([](const std::string&) {});
  const std::vector<Criterion> all = {
      {1, "gradient suite", gradients},      {2, "oracle equivalence", oracles},
      {3, "architecture fidelity", architectures}, {4, "preprocessing invariants", preprocessing},
      {5, "synthetic end-to-end", synthetic_end_to_end}, {6, "real-data reproduction", real_data},
      {7, "determinism", determinism},       {8, "shape oracle", shapes},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--reduced") g_reduced = true;
    else if (a.size() == 1 && a[0] >= '1' && a[0] <= '8') wanted.push_back(a[0] - '0');
    else {
      std::cerr << "usage: " << argv[0] << " [1-8 ...] [--reduced]\n";
      return 2;
    }
  }
  int failed = 0, passed = 0, skipped = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    std::cout << tag << "  " << c.id << " " << c.name << ": " << o.detail << std::endl;
    (o.verdict == Verdict::pass ? passed : o.verdict == Verdict::fail ? failed : skipped)++;
  }
  if (failed) return 1;
  return passed == 0 && skipped > 0 ? 77 : 0;
}

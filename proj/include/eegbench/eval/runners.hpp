#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "eegbench/baselines/baseline.hpp"
#include "eegbench/eval/cross_validate.hpp"
#include "eegbench/models/checkpoint.hpp"
#include "eegbench/models/train.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::eval {

// Per-fold seeds are derived from the run seed so folds stay independent of
// execution order.
inline std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  return Rng::derive(seed, 0x5'0000'0000ULL + fold).next_u64();
}

struct DeepRunnerOptions {
  models::ModelSpec spec;
  models::TrainConfig config;
  // When set, each fold's trained network is written to fold<k>.ckpt here.
  std::optional<std::filesystem::path> checkpoint_dir;
  data::Normalization normalization = data::Normalization::zscore_l2;
};

inline FoldRunner deep_runner(DeepRunnerOptions opt) {
  return [opt = std::move(opt)](const FrameRefs& train, const FrameRefs& test, std::size_t fold) {
    models::TrainConfig cfg = opt.config;
    cfg.seed = fold_seed(opt.config.seed, fold);
    models::TrainedModel m = models::train(opt.spec, train, cfg);
    FoldOutput out;
    const nn::Tensor y = models::predict_outputs(m.network, test, cfg.micro_batch);
    const std::size_t units = opt.spec.output_units();
    for (std::size_t i = 0; i < test.size(); ++i) {
      const std::span<const double> row(y.data() + i * units, units);
      out.labels.push_back(models::label_from_output(row));
      out.scores.push_back(models::score_from_output(row));
    }
    out.curve = m.learning_curve;
    if (opt.checkpoint_dir) {
      std::filesystem::create_directories(*opt.checkpoint_dir);
      models::save_checkpoint(*opt.checkpoint_dir / ("fold" + std::to_string(fold + 1) + ".ckpt"), m,
                              opt.normalization);
    }
    return out;
  };
}

inline FoldRunner baseline_runner(baselines::BaselineKind kind, baselines::BaselineParams params,
                                  std::uint64_t seed) {
  return [=](const FrameRefs& train, const FrameRefs& test, std::size_t fold) {
    baselines::BaselineModel m(kind, params, fold_seed(seed, fold));
    m.fit(baselines::samples_from_frames(train));
    FoldOutput out;
    for (const auto& p : m.predict(baselines::samples_from_frames(test))) {
      out.labels.push_back(p.label);
      out.scores.push_back(p.score);
    }
    out.warnings = m.warnings();
    return out;
  };
}

}  // namespace eegbench::eval

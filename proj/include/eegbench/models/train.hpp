#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/log.hpp"
#include "eegbench/models/network.hpp"
#include "eegbench/models/spec.hpp"
#include "eegbench/nn/optimizer.hpp"
#include "eegbench/rng.hpp"

namespace eegbench::models {

using data::FrameRefs;
using data::Label;

struct TrainConfig {
  std::size_t epochs = 32;
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  // Frames per forward/backward chunk inside a mini-batch. Bounds memory
  // only; the update is the same as one pass over the whole batch.
  std::size_t micro_batch = 32;
  // Throw instead of warning when a frame has not been normalized.
  bool require_normalized = false;

  static TrainConfig for_family(Family f) {
    TrainConfig c;
    switch (f) {
      case Family::cnn: c.epochs = 32; c.batch_size = 10; break;
      case Family::lstm: c.epochs = 30; c.batch_size = 16; break;
      case Family::cnn_lstm: c.epochs = 50; c.batch_size = 128; break;
    }
    c.learning_rate = 0.01;
    return c;
  }

  void validate() const {
    if (batch_size == 0) throw ParameterError("train: batch_size must be positive");
    if (micro_batch == 0) throw ParameterError("train: micro_batch must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ParameterError("train: learning_rate must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
      throw ParameterError("train: validation_fraction must lie in [0, 1)");
  }
};

// Validation fields are NaN when no validation frames were held out.
struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainedModel {
  Network network;
  TrainConfig config;
  std::vector<EpochStats> learning_curve;
};

// Scalar head: SZ iff p >= threshold. Two-unit head: unit 1 is SZ, ties go to SZ.
inline Label label_from_output(std::span<const double> out, double threshold = 0.5) {
  if (out.size() == 1) return out[0] >= threshold ? Label::SZ : Label::HC;
  if (out.size() == 2) return out[1] >= out[0] ? Label::SZ : Label::HC;
  throw DimensionError("label_from_output: expected 1 or 2 outputs, got " + std::to_string(out.size()));
}

// SZ score in [0, 1] ranked consistently with label_from_output.
inline double score_from_output(std::span<const double> out) {
  if (out.size() == 1) return out[0];
  if (out.size() == 2) return 0.5 * (1.0 + out[1] - out[0]);
  throw DimensionError("score_from_output: expected 1 or 2 outputs, got " + std::to_string(out.size()));
}

namespace train_detail {

inline constexpr std::uint64_t kInitStream = 0x1'0000'0000ULL;
inline constexpr std::uint64_t kShuffleStream = 0x2'0000'0000ULL;
inline constexpr std::uint64_t kDropoutStream = 0x3'0000'0000ULL;
inline constexpr std::uint64_t kValidationStream = 0x4'0000'0000ULL;

inline void check_frames(const FrameRefs& frames, const Shape& shape, bool require_normalized) {
  bool warned = false;
  for (const data::Frame* f : frames) {
    if (f->data.shape() != shape) {
      throw DimensionError("frame '" + f->subject_id + "' #" + std::to_string(f->frame_index) +
                           " has shape " + nn::shape_str(f->data.shape()) + ", expected " +
                           nn::shape_str(shape));
    }
    if (!f->data.all_finite()) {
      throw DataError("frame '" + f->subject_id + "' #" + std::to_string(f->frame_index) +
                      " contains non-finite samples");
    }
    if (f->normalization == data::Normalization::raw && !warned) {
      if (require_normalized) throw ContractError("model input frames must be normalized");
      log::warn("model input contains unnormalized frames");
      warned = true;
    }
  }
}

inline Tensor stack(const FrameRefs& frames, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end) {
  const Shape& s = frames[order[begin]]->data.shape();
  Tensor out({end - begin, s[0], s[1]});
  const std::size_t n = s[0] * s[1];
  for (std::size_t i = begin; i < end; ++i)
    std::copy_n(frames[order[i]]->data.data(), n, out.data() + (i - begin) * n);
  return out;
}

inline Tensor targets(const FrameRefs& frames, const std::vector<std::size_t>& order,
                      std::size_t begin, std::size_t end, std::size_t units) {
  Tensor t({end - begin, units});
  for (std::size_t i = begin; i < end; ++i) {
    const double y = data::target_value(frames[order[i]]->label);
    if (units == 1) {
      t.at(i - begin, 0) = y;
    } else {
      t.at(i - begin, 0) = 1.0 - y;
      t.at(i - begin, 1) = y;
    }
  }
  return t;
}

inline double penalty_value(const Network& net, double coeff) {
  double s = 0.0;
  for (const auto& p : net.parameters())
    if (p.penalized) s += p.value.squared_norm();
  return coeff * s;
}

inline std::size_t count_correct(const Tensor& out, const Tensor& target) {
  const std::size_t units = out.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    std::span<const double> row(out.data() + i * units, units);
    const Label truth = target.at(i, units - 1) == 1.0 ? Label::SZ : Label::HC;
    correct += label_from_output(row) == truth;
  }
  return correct;
}

// Stratified hold-out: round(fraction * class size) frames per class, but
// always leaving at least one frame of each class for training.
inline void split_validation(const FrameRefs& frames, double fraction, std::uint64_t seed,
                             std::vector<std::size_t>& train, std::vector<std::size_t>& val) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < frames.size(); ++i)
    by_class[frames[i]->label == Label::SZ ? 0 : 1].push_back(i);
  for (int c = 0; c < 2; ++c) {
    Rng rng = Rng::derive(seed, kValidationStream + static_cast<std::uint64_t>(c));
    rng.shuffle(by_class[c]);
    const auto n = by_class[c].size();
    auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
    k = std::min(k, n - 1);
    val.insert(val.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(k));
    train.insert(train.end(), by_class[c].begin() + static_cast<std::ptrdiff_t>(k), by_class[c].end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
}

}  // namespace train_detail

// Eval-mode outputs [frames x output_units], computed in chunks.
inline Tensor predict_outputs(Network& net, const FrameRefs& frames, std::size_t chunk = 32) {
  if (frames.empty()) return Tensor({0, net.spec().output_units()});
  train_detail::check_frames(frames, net.input_shape(), false);
  const std::size_t units = net.spec().output_units();
  Tensor out({frames.size(), units});
  std::vector<std::size_t> order(frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t b = 0; b < frames.size(); b += chunk) {
    const std::size_t e = std::min(frames.size(), b + chunk);
    Tensor y = net.predict(train_detail::stack(frames, order, b, e));
    std::copy_n(y.data(), y.size(), out.data() + b * units);
  }
  return out;
}

inline std::vector<double> predict_scores(Network& net, const FrameRefs& frames, std::size_t chunk = 32) {
  Tensor out = predict_outputs(net, frames, chunk);
  const std::size_t units = net.spec().output_units();
  std::vector<double> scores(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i)
    scores[i] = score_from_output({out.data() + i * units, units});
  return scores;
}

inline Label predict_label(Network& net, const data::Frame& frame, double threshold = 0.5) {
  Tensor out = predict_outputs(net, FrameRefs{&frame}, 1);
  return label_from_output(out.values(), threshold);
}

using EpochCallback = std::function<void(const EpochStats&)>;

// Continues training an existing network (mini-batch BCE plus
// coeff * sum ||W||^2 over the weight tensors).
inline TrainedModel train_network(Network initial, const FrameRefs& frames, const TrainConfig& config,
                                  const EpochCallback& on_epoch = {}) {
  config.validate();
  if (frames.empty()) throw DataError("train: empty training set");
  const auto counts = data::class_counts(frames);
  if (counts.sz == 0 || counts.hc == 0) {
    throw DataError("train: training set has a single class (SZ " + std::to_string(counts.sz) +
                    ", HC " + std::to_string(counts.hc) + ")");
  }
  if (initial.spec().l2_coeff < 0.0) throw ParameterError("train: l2 coefficient must be non-negative");
  train_detail::check_frames(frames, initial.input_shape(), config.require_normalized);

  TrainedModel model{std::move(initial), config, {}};
  Network& net = model.network;
  const ModelSpec& spec = net.spec();
  const std::size_t units = spec.output_units();

  std::vector<std::size_t> train_idx, val_idx;
  if (config.validation_fraction > 0.0) {
    train_detail::split_validation(frames, config.validation_fraction, config.seed, train_idx, val_idx);
  } else {
    for (std::size_t i = 0; i < frames.size(); ++i) train_idx.push_back(i);
  }
  FrameRefs val_frames;
  for (auto i : val_idx) val_frames.push_back(frames[i]);

  nn::OptimizerState opt;
  opt.kind = config.optimizer;
  opt.learning_rate = config.learning_rate;
  std::vector<Parameter*> params;
  for (auto& p : net.parameters()) params.push_back(&p);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    Rng shuffle_rng = Rng::derive(config.seed, train_detail::kShuffleStream + epoch);
    shuffle_rng.shuffle(order);
    // One dropout seed per epoch position; masks are independent of micro-batching.
    std::vector<std::uint64_t> dropout_seeds(order.size());
    Rng seed_rng = Rng::derive(config.seed, train_detail::kDropoutStream + epoch);
    for (auto& s : dropout_seeds) s = seed_rng.next_u64();

    double loss_sum = 0.0;
    std::size_t batches = 0, correct = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      const double batch_n = static_cast<double>(e - b);
      for (Parameter* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t c = b; c < e; c += config.micro_batch) {
        const std::size_t ce = std::min(e, c + config.micro_batch);
        Graph g;
        std::vector<Var> penalized;
        Var x = g.constant(train_detail::stack(frames, order, c, ce));
        Var logits = net.forward(g, x, Mode::train, std::span(dropout_seeds).subspan(c, ce - c),
                                 &penalized, true);
        const Tensor target = train_detail::targets(frames, order, c, ce, units);
        correct += train_detail::count_correct(nn::activation(logits.value(), Activation::sigmoid), target);
        Var loss = nn::scale(nn::bce_with_logits(logits, target), static_cast<double>(ce - c) / batch_n);
        if (c == b && spec.l2_coeff > 0.0) loss = nn::add(loss, nn::l2_penalty(penalized, spec.l2_coeff, g));
        batch_loss += loss.value()[0];
        if (!std::isfinite(loss.value()[0])) {
          throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                ", batch " + std::to_string(batches + 1));
        }
        g.backward(loss);
      }
      nn::optimizer_step(opt, params);
      loss_sum += batch_loss;
      ++batches;
    }

    EpochStats st;
    st.epoch = epoch + 1;
    st.train_loss = loss_sum / static_cast<double>(batches);
    st.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!val_frames.empty()) {
      Tensor out = predict_outputs(net, val_frames, config.micro_batch);
      std::vector<std::size_t> vorder(val_frames.size());
      for (std::size_t i = 0; i < vorder.size(); ++i) vorder[i] = i;
      const Tensor target = train_detail::targets(val_frames, vorder, 0, vorder.size(), units);
      st.val_loss = nn::bce_loss(out, target, {}, 0.0) + train_detail::penalty_value(net, spec.l2_coeff);
      st.val_accuracy = static_cast<double>(train_detail::count_correct(out, target)) /
                        static_cast<double>(val_frames.size());
    }
    if (!std::isfinite(st.train_loss)) {
      throw DivergenceError("train: non-finite loss at epoch " + std::to_string(st.epoch));
    }
    model.learning_curve.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return model;
}

// Trains a freshly initialized network; the initialization is seeded from config.seed.
inline TrainedModel train(const ModelSpec& spec, const FrameRefs& frames, const TrainConfig& config,
                          const EpochCallback& on_epoch = {}) {
  if (frames.empty()) throw DataError("train: empty training set");
  Network net(spec, frames[0]->data.shape(), Rng::derive(config.seed, train_detail::kInitStream).next_u64());
  return train_network(std::move(net), frames, config, on_epoch);
}

}  // namespace eegbench::models

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "eegbench/data/recording.hpp"
#include "eegbench/errors.hpp"
#include "eegbench/models/network.hpp"
#include "eegbench/models/spec.hpp"
#include "eegbench/models/train.hpp"

namespace eegbench::models {

using nlohmann::json;

inline json to_json(const LayerSpec& l) {
  json j{{"kind", to_string(l.kind)}};
  switch (l.kind) {
    case LayerKind::input:
    case LayerKind::flatten:
      break;
    case LayerKind::conv1d:
      j["filters"] = l.filters;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["activation"] = nn::to_string(l.activation);
      break;
    case LayerKind::dropout:
      j["rate"] = l.rate;
      break;
    case LayerKind::maxpool1d:
      j["window"] = l.kernel;
      j["stride"] = l.stride;
      break;
    case LayerKind::dense:
      j["units"] = l.units;
      j["activation"] = nn::to_string(l.activation);
      break;
    case LayerKind::lstm:
      j["units"] = l.units;
      j["kernel"] = l.kernel;
      j["return_sequence"] = l.return_sequence;
      break;
  }
  return j;
}

inline json to_json(const ModelSpec& m) {
  json layers = json::array();
  for (const auto& l : m.layers) layers.push_back(to_json(l));
  return {{"name", m.name},
          {"activation", nn::to_string(m.activation)},
          {"l2_coeff", m.l2_coeff},
          {"layers", std::move(layers)}};
}

// The layer list is rebuilt from the name and compared with the stored one.
inline ModelSpec model_spec_from_json(const json& j) {
  auto act = nn::parse_activation(j.at("activation").get<std::string>());
  if (!act) throw DataError("checkpoint: unknown activation");
  ModelSpec m = build(j.at("name").get<std::string>(), *act);
  m.l2_coeff = j.at("l2_coeff").get<double>();
  if (j.contains("layers") && to_json(m)["layers"] != j["layers"]) {
    throw DataError("checkpoint: stored layers of '" + m.name + "' differ from the built architecture");
  }
  return m;
}

inline json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"optimizer", nn::to_string(c.optimizer)},
          {"seed", c.seed},
          {"validation_fraction", c.validation_fraction},
          {"micro_batch", c.micro_batch}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  auto opt = nn::parse_optimizer(j.at("optimizer").get<std::string>());
  if (!opt) throw DataError("checkpoint: unknown optimizer");
  c.optimizer = *opt;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.micro_batch = j.value("micro_batch", std::size_t{32});
  return c;
}

inline json to_json(const EpochStats& e) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"epoch", e.epoch},
          {"train_loss", num(e.train_loss)},
          {"train_accuracy", num(e.train_accuracy)},
          {"val_loss", num(e.val_loss)},
          {"val_accuracy", num(e.val_accuracy)}};
}

// Checkpoint file layout:
//   magic "EEGBCKPT" | u32 version | u64 header length | JSON header |
//   parameter tensors as little-endian f64, in header order.
// The header holds the model spec, input shape, parameter names and shapes,
// the training config, the normalization scheme and the learning curve.
inline constexpr std::array<char, 8> kCheckpointMagic = {'E', 'E', 'G', 'B', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainedModel model;
  data::Normalization normalization = data::Normalization::zscore;
};

namespace ckpt_detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model,
                            data::Normalization normalization) {
  const Network& net = model.network;
  json header;
  header["spec"] = to_json(net.spec());
  header["input_shape"] = net.input_shape();
  header["config"] = to_json(model.config);
  header["normalization"] = data::to_string(normalization);
  json params = json::array();
  for (const auto& p : net.parameters()) params.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  header["parameters"] = std::move(params);
  json curve = json::array();
  for (const auto& e : model.learning_curve) curve.push_back(to_json(e));
  header["learning_curve"] = std::move(curve);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot create '" + path.string() + "'");
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  const std::uint32_t v = kCheckpointVersion;
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  ckpt_detail::put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : net.parameters()) {
    for (double x : p.value.values()) ckpt_detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  if (!out) throw DataError("checkpoint: write failed for '" + path.string() + "'");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
    throw DataError("checkpoint: '" + path.string() + "' is not a checkpoint file");
  unsigned char vb[4];
  if (!in.read(reinterpret_cast<char*>(vb), 4)) throw DataError("checkpoint: truncated file");
  const std::uint32_t version = vb[0] | (vb[1] << 8) | (vb[2] << 16) | (static_cast<std::uint32_t>(vb[3]) << 24);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto len = ckpt_detail::get_u64(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint: truncated header");
  const json header = json::parse(text);

  Checkpoint c;
  const ModelSpec spec = model_spec_from_json(header.at("spec"));
  const Shape input = header.at("input_shape").get<Shape>();
  c.model.network = Network(spec, input, 0);
  c.model.config = train_config_from_json(header.at("config"));
  auto norm = data::parse_normalization(header.at("normalization").get<std::string>());
  if (!norm) throw DataError("checkpoint: unknown normalization");
  c.normalization = *norm;
  auto& params = c.model.network.parameters();
  const auto& stored = header.at("parameters");
  if (stored.size() != params.size()) throw DataError("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (stored[i].at("name") != params[i].name || stored[i].at("shape").get<Shape>() != params[i].value.shape()) {
      throw DataError("checkpoint: parameter " + std::to_string(i) + " does not match the architecture");
    }
    for (double& x : params[i].value.storage()) x = std::bit_cast<double>(ckpt_detail::get_u64(in));
  }
  for (const auto& e : header.at("learning_curve")) {
    auto num = [](const json& v) {
      return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    c.model.learning_curve.push_back({e.at("epoch").get<std::size_t>(), num(e.at("train_loss")),
                                      num(e.at("train_accuracy")), num(e.at("val_loss")),
                                      num(e.at("val_accuracy"))});
  }
  return c;
}

}  // namespace eegbench::models

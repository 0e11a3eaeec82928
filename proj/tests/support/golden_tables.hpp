#pragma once

// The seven architecture tables transcribed cell by cell, and a renderer that
// turns a built ModelSpec back into the same cells. Shared by the unit tests
// and the acceptance suite.

#include <array>
#include <string>
#include <vector>

#include "eegbench/models/spec.hpp"

namespace eegbench::testing {

// Layers | Filters | Kernel Size | Stride | Activation. "--" is an empty cell.
using TableRow = std::array<std::string, 5>;

struct GoldenTable {
  std::string model;
  std::vector<TableRow> rows;
};

inline const std::vector<GoldenTable>& golden_tables() {
  static const std::vector<GoldenTable> tables = {
      {"CNN-1",
       {{"Input Data", "--", "--", "--", "--"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Max Pooling", "--", "2", "1", "--"},
        {"Flatten", "--", "--", "--", "--"},
        {"Dense", "100", "--", "--", "--"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "2", "--", "--", "Sigmoid"}}},
      {"CNN-2",
       {{"Input Data", "--", "--", "--", "--"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Max Pooling", "--", "2", "1", "--"},
        {"Flatten", "--", "--", "--", "--"},
        {"Dense", "100", "--", "--", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "1", "--", "--", "Sigmoid"}}},
      {"CNN-3",
       {{"Input Data", "--", "--", "--", "--"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Max Pooling", "--", "2", "1", "--"},
        {"Flatten", "--", "--", "--", "--"},
        {"Dense", "100", "--", "--", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "50", "--", "--", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "1", "--", "--", "Sigmoid"}}},
      {"LSTM-1",
       {{"Input Data", "--", "--", "--", "--"},
        {"LSTM", "100", "1", "--", "--"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Dense", "100", "--", "--", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "1", "--", "--", "Sigmoid"}}},
      {"LSTM-2",
       {{"Input Data", "--", "--", "--", "--"},
        {"LSTM", "100", "1", "--", "--"},
        {"LSTM", "50", "1", "--", "--"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Dense", "100", "--", "--", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "1", "--", "--", "Sigmoid"}}},
      {"CNN-LSTM-1",
       {{"Input Data", "--", "--", "--", "--"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Max Pooling", "--", "2", "1", "--"},
        {"Flatten", "--", "--", "--", "--"},
        {"LSTM", "100", "1", "--", "--"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Dense", "100", "--", "--", "--"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "1", "--", "--", "Sigmoid"}}},
      {"CNN-LSTM-2",
       {{"Input Data", "--", "--", "--", "--"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Conv1D", "64", "3", "1", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Max Pooling", "--", "2", "1", "--"},
        {"Flatten", "--", "--", "--", "--"},
        {"LSTM", "100", "1", "--", "--"},
        {"Dropout", "--", "--", "Rate=0.5", "--"},
        {"Dense", "100", "--", "--", "--"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "50", "--", "--", "ReLU"},
        {"Dropout", "--", "--", "Rate=0.25", "--"},
        {"Dense", "1", "--", "--", "Sigmoid"}}},
  };
  return tables;
}

inline std::string table_activation(nn::Activation a) {
  switch (a) {
    case nn::Activation::relu: return "ReLU";
    case nn::Activation::leaky_relu: return "Leaky ReLU";
    case nn::Activation::selu: return "seLU";
    case nn::Activation::sigmoid: return "Sigmoid";
    default: return "--";
  }
}

inline std::string table_number(double x) {
  std::string s = std::to_string(x);
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  return s;
}

inline TableRow render_row(const models::LayerSpec& l) {
  using models::LayerKind;
  const std::string none = "--";
  switch (l.kind) {
    case LayerKind::input: return {"Input Data", none, none, none, none};
    case LayerKind::conv1d:
      return {"Conv1D", std::to_string(l.filters), std::to_string(l.kernel), std::to_string(l.stride),
              table_activation(l.activation)};
    case LayerKind::dropout: return {"Dropout", none, none, "Rate=" + table_number(l.rate), none};
    case LayerKind::maxpool1d:
      return {"Max Pooling", none, std::to_string(l.kernel), std::to_string(l.stride), none};
    case LayerKind::flatten: return {"Flatten", none, none, none, none};
    case LayerKind::dense: return {"Dense", std::to_string(l.units), none, none, table_activation(l.activation)};
    case LayerKind::lstm: return {"LSTM", std::to_string(l.units), std::to_string(l.kernel), none, none};
  }
  return {};
}

inline std::vector<TableRow> render(const models::ModelSpec& m) {
  std::vector<TableRow> out;
  for (const auto& l : m.layers) out.push_back(render_row(l));
  return out;
}

}  // namespace eegbench::testing

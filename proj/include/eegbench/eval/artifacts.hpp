#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "eegbench/errors.hpp"
#include "eegbench/eval/cross_validate.hpp"
#include "eegbench/eval/report.hpp"

namespace eegbench::eval {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot create '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline std::string roc_csv(const RocCurve& c) {
  std::string s = "threshold,fpr,tpr\n";
  for (const auto& p : c.points) s += num(p.threshold) + "," + num(p.fpr) + "," + num(p.tpr) + "\n";
  return s;
}

inline std::string curves_csv(const std::vector<CurvePoint>& c) {
  std::string s = "epoch,train_loss,val_loss,train_acc,val_acc\n";
  for (const auto& p : c) {
    s += std::to_string(p.epoch) + "," + num(p.train_loss) + "," + num(p.val_loss) + "," + num(p.train_accuracy) +
         "," + num(p.val_accuracy) + "\n";
  }
  return s;
}

// ---- SVG ----

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

namespace svg_detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string header(double w, double h, const std::string& title) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) +
         "\" height=\"" + fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + fmt(w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + xml_escape(title) +
         "</text>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                        const std::string& extra = {}) {
  return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" + anchor + "\"" + extra + ">" +
         xml_escape(s) + "</text>\n";
}

}  // namespace svg_detail

// Line plot with one polyline per series. Non-finite points are skipped.
inline std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                 const std::vector<Series>& series, bool unit_square = false) {
  using namespace svg_detail;
  const double w = 640, h = 480, l = 70, r = 160, t = 40, b = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!unit_square) {
    x0 = y0 = std::numeric_limits<double>::infinity();
    x1 = y1 = -x0;
    for (const auto& s : series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  const double pw = w - l - r, ph = h - t - b;
  auto px = [&](double x) { return l + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return t + ph - (y - y0) / (y1 - y0) * ph; };

  std::string s = header(w, h, title);
  s += "<rect x=\"" + fmt(l) + "\" y=\"" + fmt(t) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    char lx[32], ly[32];
    std::snprintf(lx, sizeof lx, "%.3g", fx);
    std::snprintf(ly, sizeof ly, "%.3g", fy);
    s += text(px(fx), t + ph + 16, lx);
    s += text(l - 6, py(fy) + 4, ly, "end");
  }
  s += text(l + pw / 2, h - 20, xlabel);
  s += text(18, t + ph / 2, ylabel, "middle", " transform=\"rotate(-90 18 " + fmt(t + ph / 2) + ")\"");
  if (unit_square) {
    s += "<line x1=\"" + fmt(px(0)) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(px(1)) + "\" y2=\"" + fmt(py(1)) +
         "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].x[i]) || !std::isfinite(series[k].y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fmt(px(series[k].x[i])) + "," + fmt(py(series[k].y[i]));
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
         "\"/>\n";
    const double ly = t + 10 + 18.0 * static_cast<double>(k);
    s += "<rect x=\"" + fmt(w - r + 12) + "\" y=\"" + fmt(ly) + "\" width=\"12\" height=\"3\" fill=\"" + color +
         "\"/>\n";
    s += text(w - r + 30, ly + 5, series[k].name, "start");
  }
  return s + "</svg>\n";
}

inline std::string svg_roc(const std::string& title, const RocCurve& c) {
  Series s{"ROC", {}, {}};
  for (const auto& p : c.points) {
    s.x.push_back(p.fpr);
    s.y.push_back(p.tpr);
  }
  return svg_line_plot(title, "False positive rate", "True positive rate", {s}, true);
}

// Loss and accuracy series of a fold-mean learning curve; validation series
// are left out when no validation split was held out.
inline std::string svg_curves(const std::string& title, const std::vector<CurvePoint>& c) {
  Series tl{"train loss", {}, {}}, vl{"val loss", {}, {}}, ta{"train acc", {}, {}}, va{"val acc", {}, {}};
  bool has_val = false;
  for (const auto& p : c) {
    const double e = static_cast<double>(p.epoch);
    tl.x.push_back(e), tl.y.push_back(p.train_loss);
    vl.x.push_back(e), vl.y.push_back(p.val_loss);
    ta.x.push_back(e), ta.y.push_back(p.train_accuracy);
    va.x.push_back(e), va.y.push_back(p.val_accuracy);
    has_val = has_val || std::isfinite(p.val_loss);
  }
  std::vector<Series> all{tl, ta};
  if (has_val) all = {tl, vl, ta, va};
  return svg_line_plot(title, "Epoch", "Loss / accuracy", all);
}

// Grouped bars: one group per table row, one bar per metric (percent).
inline std::string svg_grouped_bars(const std::string& title, const ResultsTable& table) {
  using namespace svg_detail;
  const char* names[] = {"Acc", "Prec", "Rec", "AUC"};
  const std::size_t groups = table.rows.size();
  const double gw = 90, l = 60, r = 110, t = 40, b = 120, ph = 300;
  const double w = l + r + gw * static_cast<double>(std::max<std::size_t>(groups, 1)), h = t + ph + b;
  auto py = [&](double pct) { return t + ph - pct / 100.0 * ph; };
  std::string s = header(w, h, title);
  s += "<rect x=\"" + fmt(l) + "\" y=\"" + fmt(t) + "\" width=\"" + fmt(w - l - r) + "\" height=\"" + fmt(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) s += text(l - 6, py(25.0 * i) + 4, std::to_string(25 * i), "end");
  for (std::size_t g = 0; g < groups; ++g) {
    const TableRow& row = table.rows[g];
    const double vals[] = {row.accuracy.mean, row.precision.mean, row.recall.mean, row.auc.mean};
    const double gx = l + gw * static_cast<double>(g) + 9;
    for (std::size_t m = 0; m < 4; ++m) {
      const double pct = std::clamp(vals[m] * 100.0, 0.0, 100.0);
      s += "<rect x=\"" + fmt(gx + 18.0 * static_cast<double>(m)) + "\" y=\"" + fmt(py(pct)) +
           "\" width=\"16\" height=\"" + fmt(t + ph - py(pct)) + "\" fill=\"" + kPalette[m] + "\"><title>" +
           xml_escape(row.label) + " " + names[m] + " " + percent(vals[m]) + "</title></rect>\n";
    }
    const double cx = gx + 36, cy = t + ph + 12;
    s += text(cx, cy, row.label, "end", " transform=\"rotate(-40 " + fmt(cx) + " " + fmt(cy) + ")\"");
  }
  for (std::size_t m = 0; m < 4; ++m) {
    const double ly = t + 10 + 18.0 * static_cast<double>(m);
    s += "<rect x=\"" + fmt(w - r + 12) + "\" y=\"" + fmt(ly) + "\" width=\"12\" height=\"12\" fill=\"" +
         kPalette[m] + "\"/>\n";
    s += text(w - r + 30, ly + 10, names[m], "start");
  }
  return s + "</svg>\n";
}

}  // namespace eegbench::eval

#pragma once

// Tiny SVG emitter for the report figures. Output is deterministic text.

#include "minlgan/error.hpp"
#include "minlgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace minlgan::svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

class Document {
 public:
  Document(double width, double height) : width_(width), height_(height) {}

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& extra = "") {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
             "\" fill=\"" + fill + "\" " + extra + "/>\n";
  }
  void circle(double cx, double cy, double r, const std::string& fill, double opacity = 1.0) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" + fill +
             "\" fill-opacity=\"" + num(opacity) + "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0,
            const std::string& extra = "") {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" " + extra + "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" points=\"";
    for (const auto& [x, y] : pts) body_ += num(x) + "," + num(y) + " ";
    body_ += "\"/>\n";
  }
  void text(double x, double y, const std::string& s, double size = 12, const std::string& anchor = "start") {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
  }

  void vertical_text(double x, double y, const std::string& s, double size = 12) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 " + num(x) + " " + num(y) +
             ")\">" + escape(s) + "</text>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
           "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" " +
           "fill=\"white\"/>\n" + body_ + "</svg>\n";
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << str();
  }

 private:
  double width_, height_;
  std::string body_;
};

// Data-to-pixel mapping for a rectangular plot area with a frame and ticks.
class Axes {
 public:
  Axes(Document& doc, double left, double top, double width, double height, double x0, double x1, double y0,
       double y1)
      : doc_(doc), left_(left), top_(top), w_(width), h_(height), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
    if (!(y1_ > y0_)) y1_ = y0_ + 1.0;
  }

  double px(double x) const { return left_ + (x - x0_) / (x1_ - x0_) * w_; }
  double py(double y) const { return top_ + h_ - (y - y0_) / (y1_ - y0_) * h_; }

  void frame(const std::string& title, const std::string& xlabel, const std::string& ylabel, int ticks = 5) {
    doc_.rect(left_, top_, w_, h_, "none", "stroke=\"black\"");
    for (int i = 0; ticks > 0 && i <= ticks; ++i) {
      const double fx = x0_ + (x1_ - x0_) * i / ticks, fy = y0_ + (y1_ - y0_) * i / ticks;
      doc_.line(px(fx), top_ + h_, px(fx), top_ + h_ + 4, "black");
      doc_.text(px(fx), top_ + h_ + 16, tick_label(fx), 10, "middle");
      doc_.line(left_ - 4, py(fy), left_, py(fy), "black");
      doc_.text(left_ - 6, py(fy) + 3, tick_label(fy), 10, "end");
    }
    doc_.text(left_ + w_ / 2, top_ - 8, title, 13, "middle");
    doc_.text(left_ + w_ / 2, top_ + h_ + 32, xlabel, 11, "middle");
    doc_.vertical_text(left_ - 42, top_ + h_ / 2, ylabel, 11);
  }

  void legend(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double y = top_ + 14 + 16.0 * static_cast<double>(i);
      doc_.line(left_ + w_ + 10, y - 4, left_ + w_ + 28, y - 4, palette(i), 2.5);
      doc_.text(left_ + w_ + 32, y, names[i], 11);
    }
  }

 private:
  static std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  Document& doc_;
  double left_, top_, w_, h_, x0_, x1_, y0_, y1_;
};

struct Curve {
  std::string name;
  std::vector<RocPoint> points;
};

inline Document roc_overlay(const std::string& title, const std::vector<Curve>& curves) {
  Document doc(640, 460);
  Axes ax(doc, 60, 40, 400, 360, 0.0, 1.0, 0.0, 1.0);
  ax.frame(title, "false positive rate", "TPR");
  doc.line(ax.px(0), ax.py(0), ax.px(1), ax.py(1), "#bbbbbb", 1.0, "stroke-dasharray=\"4 3\"");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : curves[i].points) pts.emplace_back(ax.px(p.fpr), ax.py(p.tpr));
    doc.polyline(pts, palette(i));
    names.push_back(curves[i].name);
  }
  ax.legend(names);
  return doc;
}

inline Document boxplot(const std::string& title, const std::vector<BoxStats>& boxes) {
  if (boxes.empty()) throw InvalidArgument("boxplot needs at least one group");
  double lo = boxes.front().min, hi = boxes.front().max;
  for (const auto& b : boxes) {
    lo = std::min(lo, b.min);
    hi = std::max(hi, b.max);
  }
  const double pad = 0.05 * std::max(hi - lo, 1e-12);
  const double width = std::max(400.0, 70.0 * static_cast<double>(boxes.size()) + 100.0);
  Document doc(width, 420);
  Axes ax(doc, 60, 40, width - 90, 320, 0.0, static_cast<double>(boxes.size()), lo - pad, hi + pad);
  ax.frame(title, "", "anomaly score", 0);
  for (int i = 0; i <= 5; ++i) {
    const double v = lo - pad + (hi - lo + 2 * pad) * i / 5.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    doc.text(54, ax.py(v) + 3, buf, 10, "end");
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double c = ax.px(static_cast<double>(i) + 0.5), half = 18;
    doc.line(c, ax.py(b.min), c, ax.py(b.q1), "black");
    doc.line(c, ax.py(b.q3), c, ax.py(b.max), "black");
    doc.line(c - half / 2, ax.py(b.min), c + half / 2, ax.py(b.min), "black");
    doc.line(c - half / 2, ax.py(b.max), c + half / 2, ax.py(b.max), "black");
    doc.rect(c - half, ax.py(b.q3), 2 * half, std::max(ax.py(b.q1) - ax.py(b.q3), 0.5), palette(i),
             "fill-opacity=\"0.5\" stroke=\"black\"");
    doc.line(c - half, ax.py(b.median), c + half, ax.py(b.median), "black", 2.0);
    doc.text(c, 380, b.group + " (" + std::to_string(b.count) + ")", 10, "middle");
  }
  return doc;
}

// One curve per series with +-std whiskers.
inline Document stability_plot(const std::string& title, const std::vector<std::string>& names,
                               const std::vector<std::vector<StabilityPoint>>& series) {
  double lo = 1.0, hi = 0.0, kmax = 1.0;
  for (const auto& s : series)
    for (const auto& p : s) {
      lo = std::min(lo, p.mean_auc - p.std_auc);
      hi = std::max(hi, p.mean_auc + p.std_auc);
      kmax = std::max(kmax, static_cast<double>(p.k));
    }
  const double pad = 0.05 * std::max(hi - lo, 1e-3);
  Document doc(640, 460);
  Axes ax(doc, 60, 40, 400, 360, 0.5, kmax + 0.5, lo - pad, hi + pad);
  ax.frame(title, "number of discriminators", "AUC");
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : series[i]) {
      const double x = ax.px(static_cast<double>(p.k));
      pts.emplace_back(x, ax.py(p.mean_auc));
      doc.line(x, ax.py(p.mean_auc - p.std_auc), x, ax.py(p.mean_auc + p.std_auc), palette(i));
      doc.circle(x, ax.py(p.mean_auc), 2.5, palette(i));
    }
    doc.polyline(pts, palette(i));
  }
  ax.legend(names);
  return doc;
}

}  // namespace minlgan::svg

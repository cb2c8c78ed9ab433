// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "lidarsdf/geometry.hpp"

namespace lidarsdf {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

struct Series {
  std::string name;
  std::string color;
  std::vector<double> x, y;
  bool line = true;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string raw_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open CSV");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// XML comments may not contain "--".
std::string data_comment(const std::filesystem::path& csv) {
  std::string text = raw_text(csv);
  for (std::size_t pos; (pos = text.find("--")) != std::string::npos;) text.replace(pos, 2, "- -");
  return "<!-- data from " + csv.filename().string() + "\n" + text + "-->\n";
}

void write_chart(const std::filesystem::path& svg, const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<Series>& series, const std::string& comment) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double v) { return kTop + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ofstream out(svg);
  if (!out) throw Error(svg.string() + ": cannot write file");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << comment;
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = xr.lo + (xr.hi - xr.lo) * t / 5.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * t / 5.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << num(xv)
        << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
        << "\" stroke=\"#e0e0e0\"/>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
  double legend_y = kTop + 16;
  for (const auto& s : series) {
    if (s.line && s.x.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (std::isfinite(s.y[i])) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      }
      out << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"" << (s.line ? 2.5 : 1.5)
          << "\" fill=\"" << s.color << "\"/>\n";
    }
    if (!s.name.empty()) {
      out << "<rect x=\"" << kLeft + pw - 150 << "\" y=\"" << legend_y - 9 << "\" width=\"10\" height=\"10\" fill=\""
          << s.color << "\"/>\n";
      out << "<text x=\"" << kLeft + pw - 135 << "\" y=\"" << legend_y << "\">" << escape(s.name) << "</text>\n";
      legend_y += 16;
    }
  }
  out << "</svg>\n";
}

double log10_or_nan(double v) { return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    throw ValidationError("CSV cell '" + cell + "' in column '" + name + "' is not a number");
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream in(raw_text(path));
  CsvTable t;
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty CSV");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw ValidationError(path.string() + ": ragged CSV row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void plot_loss_history(const std::filesystem::path& csv, const std::filesystem::path& svg) {
  const auto t = read_csv(csv);
  Series s{"", "#1f77b4", {}, {}, true};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    s.x.push_back(t.number(i, "epoch"));
    s.y.push_back(log10_or_nan(t.number(i, "mean_loss")));
  }
  write_chart(svg, "Training loss", "epoch", "log10 mean Huber loss", {s}, data_comment(csv));
}

void plot_sweep(const std::filesystem::path& csv, const std::filesystem::path& svg) {
  const auto t = read_csv(csv);
  Series plain{"without skip", "#d62728", {}, {}, true};
  Series skip{"with skip", "#2ca02c", {}, {}, true};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Series& s = t.number(i, "skip") != 0.0 ? skip : plain;
    s.x.push_back(t.number(i, "params"));
    s.y.push_back(log10_or_nan(t.number(i, "final_test_loss")));
  }
  write_chart(svg, "Test loss vs trainable parameters", "trainable parameters", "log10 test loss", {plain, skip},
              data_comment(csv));
}

void plot_scatter(const std::filesystem::path& csv, const std::filesystem::path& svg, const std::string& title) {
  const auto t = read_csv(csv);
  Series valid{"valid confidence", "#1f77b4", {}, {}, false};
  Series invalid{"invalid confidence", "#d62728", {}, {}, false};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Series& s = t.number(i, "valid_flag") != 0.0 ? valid : invalid;
    s.x.push_back(t.number(i, "sdf_label"));
    s.y.push_back(t.number(i, "conf_pred"));
  }
  write_chart(svg, title, "SDF label [m]", "predicted confidence", {valid, invalid}, data_comment(csv));
}

void plot_bars(const std::filesystem::path& csv, const std::string& label_column, const std::string& value_column,
               const std::filesystem::path& svg, const std::string& title) {
  const auto t = read_csv(csv);
  const std::size_t label = t.column(label_column);
  double top = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) top = std::max(top, t.number(i, value_column));
  if (!(top > 0.0)) top = 1.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const double slot = pw / static_cast<double>(std::max<std::size_t>(t.rows.size(), 1));

  std::ofstream out(svg);
  if (!out) throw Error(svg.string() + ": cannot write file");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << data_comment(csv);
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  out << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << kTop + ph << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double v = t.number(i, value_column);
    const double h = std::max(0.0, v) / top * ph;
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.2;
    out << "<rect x=\"" << x << "\" y=\"" << kTop + ph - h << "\" width=\"" << slot * 0.6 << "\" height=\"" << h
        << "\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << x + slot * 0.3 << "\" y=\"" << kTop + ph - h - 5 << "\" text-anchor=\"middle\">" << num(v)
        << "</text>\n";
    std::string name;
    for (std::size_t c = 0; c <= label; ++c) name += (c ? " / " : "") + t.rows[i][c];
    out << "<text x=\"" << x + slot * 0.3 << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
        << escape(name) << "</text>\n";
  }
  out << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(value_column) << "</text>\n";
  out << "</svg>\n";
}

}  // namespace lidarsdf

// Copyright 2026 The depth-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "depth/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "depth/errors.h"

namespace depth {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string escape_xml(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Roughly `count` round tick values covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int count) {
  const double span = hi - lo;
  const double raw = span / std::max(count, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = f * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

CsvTable CsvTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics file " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("metrics file " + path.string() + " is empty");
  t.columns = split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.columns.size()) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(t.columns.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::size_t CsvTable::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DataError("column '" + name + "' not found");
  return static_cast<std::size_t>(it - columns.begin());
}

Series extract_series(const CsvTable& table, const std::string& label,
                      const std::string& column, const std::string& x_column) {
  const std::size_t xi = table.column_index(x_column);
  const std::size_t yi = table.column_index(column);
  Series s;
  s.label = label;
  for (const auto& row : table.rows) {
    if (row[xi].empty() || row[yi].empty()) continue;
    try {
      s.points.emplace_back(std::stod(row[xi]), std::stod(row[yi]));
    } catch (const std::exception&) {
      throw DataError("non-numeric cell in column '" + column + "'");
    }
  }
  return s;
}

std::string merge_csv(const std::vector<CsvTable>& tables,
                      const std::vector<std::string>& labels) {
  if (tables.size() != labels.size()) {
    throw std::invalid_argument("one label per table required");
  }
  std::vector<std::string> columns;
  for (const auto& t : tables) {
    for (const auto& c : t.columns) {
      if (std::find(columns.begin(), columns.end(), c) == columns.end()) columns.push_back(c);
    }
  }
  std::ostringstream out;
  out << "run";
  for (const auto& c : columns) out << "," << c;
  out << "\n";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& t = tables[i];
    std::vector<int> where(columns.size(), -1);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto it = std::find(t.columns.begin(), t.columns.end(), columns[c]);
      if (it != t.columns.end()) where[c] = static_cast<int>(it - t.columns.begin());
    }
    for (const auto& row : t.rows) {
      out << labels[i];
      for (int w : where) out << "," << (w >= 0 ? row[static_cast<std::size_t>(w)] : "");
      out << "\n";
    }
  }
  return out.str();
}

std::string render_svg(const std::vector<Series>& series, const PlotOptions& opts) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0;
    x_hi = 1;
    y_lo = 0;
    y_hi = 1;
  }
  if (x_hi - x_lo <= 0) x_hi = x_lo + 1;
  if (y_hi - y_lo <= 0) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pad_y = 0.05 * (y_hi - y_lo);
  y_lo -= pad_y;
  y_hi += pad_y;

  const double left = 70, right = 170, top = 40, bottom = 50;
  const double w = opts.width, h = opts.height;
  const double pw = w - left - right, ph = h - top - bottom;
  auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double y) { return top + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
    << opts.height << "\" viewBox=\"0 0 " << opts.width << " " << opts.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opts.title.empty()) {
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-size=\"15\">" << escape_xml(opts.title) << "</text>\n";
  }
  for (double t : nice_ticks(x_lo, x_hi, 6)) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(t))
      << "\" y2=\"" << num(top + ph) << "\" stroke=\"#e6e6e6\"/>\n";
    o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(top + ph + 16)
      << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  }
  for (double t : nice_ticks(y_lo, y_hi, 6)) {
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(left + pw)
      << "\" y2=\"" << num(sy(t)) << "\" stroke=\"#e6e6e6\"/>\n";
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(t) + 4)
      << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  }
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 12)
    << "\" text-anchor=\"middle\">" << escape_xml(opts.x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << num(top + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(opts.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % std::size(kColors)];
    o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.8\" points=\"";
    bool first = true;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      o << (first ? "" : " ") << num(sx(x)) << "," << num(sy(y));
      first = false;
    }
    o << "\"><title>" << escape_xml(s.label) << "</title></polyline>\n";
    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    o << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
      << num(left + pw + 36) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    o << "<text class=\"legend\" x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly + 4) << "\">"
      << escape_xml(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace depth

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

#ifndef DEPTH_PLOT_H_
#define DEPTH_PLOT_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace depth {

// A comma-separated table with a header row, as written by the trainer.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  static CsvTable load(const std::filesystem::path& path);
  // Throws DataError naming the column when it is absent.
  std::size_t column_index(const std::string& name) const;
};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (step, value)
};

// Rows with an empty cell in `column` are skipped.
Series extract_series(const CsvTable& table, const std::string& label,
                      const std::string& column, const std::string& x_column = "step");

// Long format: a leading "run" column followed by the union of all columns
// in first-seen order. Missing cells are left empty.
std::string merge_csv(const std::vector<CsvTable>& tables, const std::vector<std::string>& labels);

struct PlotOptions {
  std::string title;
  std::string x_label = "step";
  std::string y_label;
  int width = 800;
  int height = 480;
};

// Standalone SVG line chart; one polyline and legend entry per series.
std::string render_svg(const std::vector<Series>& series, const PlotOptions& opts);

}  // namespace depth

#endif  // DEPTH_PLOT_H_

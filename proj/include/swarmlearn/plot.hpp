#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swarmlearn/metrics.hpp"

namespace swarmlearn {

struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  // Optional shaded band, same length as x.
  std::vector<double> lower;
  std::vector<double> upper;
};

struct PlotLabels {
  std::string title;
  std::string x;
  std::string y;
  bool log_y = false;
};

std::string svg_line_plot(const std::vector<LineSeries>& series, const PlotLabels& labels);

struct BoxGroup {
  std::string label;
  BoxStats stats;
};

std::string svg_box_plot(const std::vector<BoxGroup>& groups, const PlotLabels& labels);

// Cells laid out row-major over (rows, cols); missing values are drawn
// hatched, values above `flag_above` are drawn white.
struct Heatmap {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::optional<double>> values;
  std::optional<double> flag_above;
};

std::string svg_heatmap(const Heatmap& map, const PlotLabels& labels);

// Robot paths projected onto the first two position coordinates.
std::string svg_trajectory(const Trajectory& traj, const PlotLabels& labels);

std::string xml_escape(const std::string& text);

}  // namespace swarmlearn

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace slicesim {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> err;  // optional symmetric error bars
};

struct PlotWindow {
  double x0 = 0, x1 = 0;  // shaded x-range annotation
};

// Writes a deterministic standalone SVG line chart. Plots are derived
// artifacts only; nothing here touches result files.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotSeries>& series,
                     const std::optional<PlotWindow>& window = std::nullopt);

}  // namespace slicesim

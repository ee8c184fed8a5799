#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bea {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool y_from_zero = false;
};

/// Minimal deterministic SVG line plot (fixed palette, fixed formatting).
void write_line_plot(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
                     const PlotOptions& options);

}  // namespace bea

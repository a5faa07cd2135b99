#pragma once

#include <string>
#include <vector>

namespace mct {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

// Minimal line chart writer; enough for trajectory, angle, input and energy
// plots without a plotting dependency.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, int width = 900, int height = 420);

}  // namespace mct

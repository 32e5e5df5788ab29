#pragma once

#include <string>
#include <vector>

namespace diffadmm {

struct SvgSeries {
  std::string label;
  std::vector<double> y;  // plotted against 0..n-1
};

// Minimal static line plot, written directly as well-formed XML (no plotting
// dependency). Non-finite samples break the polyline. log_y plots log10 of
// positive values.
void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y = false);

}  // namespace diffadmm

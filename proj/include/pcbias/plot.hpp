#pragma once

#include <string>
#include <vector>

namespace pcbias {

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title, xlabel, ylabel;
    bool log_y = false;
};

// Standalone SVG line chart. Non-finite points (and non-positive ones on a log
// axis) are skipped.
std::string svg_line_plot(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace pcbias

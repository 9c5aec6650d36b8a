#pragma once

// Minimal self-contained SVG line plots (no plotting dependency). Output is
// deterministic: fixed viewport, fixed tick policy, printf-formatted numbers.

#include <string>
#include <vector>

namespace steklov {

struct PlotSeries {
    std::vector<double> x, y;
    std::string label;
    std::string color = "#1f6fb2";
    bool markers = false;
    bool line = true;
};

struct LinePlot {
    std::string title, xlabel, ylabel;
    std::vector<PlotSeries> series;
    bool logx = false;
    bool logy = false;
};

std::string render_svg(const LinePlot& plot);
void write_svg_file(const std::string& path, const LinePlot& plot);

}  // namespace steklov

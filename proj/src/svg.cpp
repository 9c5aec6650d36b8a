#include "steklov/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "steklov/errors.hpp"

namespace steklov {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const char* kPalette[] = {"#1f6fb2", "#b2421f", "#2e8540", "#6f42b2", "#b2861f",
                          "#1fb2a6", "#b21f6f", "#555555"};

}  // namespace

std::string render_svg(const LinePlot& plot) {
    const double W = 800, H = 560;
    const double ml = 80, mr = 30, mt = 50, mb = 60;

    auto tx = [&](double v) { return plot.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return plot.logy ? std::log10(v) : v; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const PlotSeries& s : plot.series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (plot.logx && !(s.x[i] > 0)) continue;
            if (plot.logy && !(s.y[i] > 0)) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    }
    if (!(xmin < xmax)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymin < ymax)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (ty(v) - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">"
       << plot.title << "</text>\n";

    // frame and ticks
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (W - ml - mr)
       << "\" height=\"" << (H - mt - mb) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    const int nticks = 6;
    for (int i = 0; i < nticks; ++i) {
        const double fx = xmin + (xmax - xmin) * i / (nticks - 1);
        const double fy = ymin + (ymax - ymin) * i / (nticks - 1);
        const double gx = ml + (W - ml - mr) * i / (nticks - 1);
        const double gy = H - mb - (H - mt - mb) * i / (nticks - 1);
        const double label_x = plot.logx ? std::pow(10.0, fx) : fx;
        const double label_y = plot.logy ? std::pow(10.0, fy) : fy;
        os << "<line x1=\"" << gx << "\" y1=\"" << (H - mb) << "\" x2=\"" << gx << "\" y2=\""
           << (H - mb + 5) << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << gx << "\" y=\"" << (H - mb + 20)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << num(label_x) << "</text>\n";
        os << "<line x1=\"" << (ml - 5) << "\" y1=\"" << gy << "\" x2=\"" << ml << "\" y2=\"" << gy
           << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << (ml - 8) << "\" y=\"" << (gy + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << num(label_y) << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << (H - 18)
       << "\" font-size=\"13\" text-anchor=\"middle\">" << plot.xlabel << "</text>\n";
    os << "<text x=\"20\" y=\"" << H / 2 << "\" font-size=\"13\" text-anchor=\"middle\" "
       << "transform=\"rotate(-90 20 " << H / 2 << ")\">" << plot.ylabel << "</text>\n";

    int color_idx = 0;
    double legend_y = mt + 16;
    for (const PlotSeries& s : plot.series) {
        const std::string color =
            s.color.empty() ? kPalette[color_idx % 8] : s.color;
        ++color_idx;
        if (s.line && s.x.size() > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (plot.logx && !(s.x[i] > 0)) continue;
                if (plot.logy && !(s.y[i] > 0)) continue;
                os << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
            }
            os << "\"/>\n";
        }
        if (s.markers) {
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (plot.logx && !(s.x[i] > 0)) continue;
                if (plot.logy && !(s.y[i] > 0)) continue;
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
                   << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
        }
        if (!s.label.empty()) {
            os << "<rect x=\"" << (W - mr - 160) << "\" y=\"" << (legend_y - 9)
               << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
            os << "<text x=\"" << (W - mr - 144) << "\" y=\"" << legend_y
               << "\" font-size=\"11\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    os << "</svg>\n";
    return os.str();
}

void write_svg_file(const std::string& path, const LinePlot& plot) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open SVG output file: " + path);
    os << render_svg(plot);
}

}  // namespace steklov

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "genmix/common.hpp"
#include "genmix/matrix.hpp"

namespace genmix {

struct ScatterGroup {
    Matrix points;       // first two columns are plotted
    std::string color;
    double radius = 2.0;
    double opacity = 0.8;
};

// Fixed 600x600 scatter plot; the viewport is fitted to the union of all
// groups with a 5% margin and the y axis points up.
inline void svg_scatter(const std::string& path, const std::vector<ScatterGroup>& groups,
                        const std::string& title = "") {
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (const auto& g : groups)
        for (std::size_t i = 0; i < g.points.rows(); ++i) {
            lo_x = std::min(lo_x, g.points(i, 0));
            hi_x = std::max(hi_x, g.points(i, 0));
            lo_y = std::min(lo_y, g.points(i, 1));
            hi_y = std::max(hi_y, g.points(i, 1));
        }
    if (lo_x > hi_x) {
        lo_x = lo_y = -1.0;
        hi_x = hi_y = 1.0;
    }
    double pad_x = std::max(1e-9, (hi_x - lo_x) * 0.05);
    double pad_y = std::max(1e-9, (hi_y - lo_y) * 0.05);
    lo_x -= pad_x;
    hi_x += pad_x;
    lo_y -= pad_y;
    hi_y += pad_y;
    const double W = 600.0, H = 600.0;
    auto sx = [&](double x) { return (x - lo_x) / (hi_x - lo_x) * W; };
    auto sy = [&](double y) { return H - (y - lo_y) / (hi_y - lo_y) * H; };

    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("svg_scatter: cannot open " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
         "viewBox=\"0 0 600 600\">\n";
    f << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
    char buf[160];
    for (const auto& g : groups) {
        f << "<g fill=\"" << g.color << "\" fill-opacity=\"" << g.opacity << "\">\n";
        for (std::size_t i = 0; i < g.points.rows(); ++i) {
            std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\"/>\n",
                          sx(g.points(i, 0)), sy(g.points(i, 1)), g.radius);
            f << buf;
        }
        f << "</g>\n";
    }
    if (!title.empty())
        f << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
          << "</text>\n";
    f << "</svg>\n";
    if (!f) throw ParseError("svg_scatter: write failed for " + path);
}

inline const char* component_color(std::size_t j) {
    static const char* palette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00",
                                    "#a65628", "#f781bf", "#17becf", "#bcbd22", "#666666"};
    return palette[j % 10];
}

} // namespace genmix

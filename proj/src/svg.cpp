#include "leaklock/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace leaklock {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string LinePlot::render() const {
    if (x.empty() || series.empty()) throw ConfigError("LinePlot: nothing to plot");
    for (const auto& s : series)
        if (s.y.size() != x.size()) throw ShapeError("LinePlot: series length mismatch");

    double x_min = *std::min_element(x.begin(), x.end());
    double x_max = *std::max_element(x.begin(), x.end());
    double y_min = series[0].y[0];
    double y_max = y_min;
    for (const auto& s : series)
        for (double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const double left = 70, right = 20, top = 40, bottom = 50;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto sx = [&](double v) { return left + pw * (v - x_min) / (x_max - x_min); };
    auto sy = [&](double v) { return top + ph * (1.0 - (v - y_min) / (y_max - y_min)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // axes and ticks
    svg << "<g stroke=\"#444\" stroke-width=\"1\">\n"
        << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw
        << "\" y2=\"" << top + ph << "\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << top + ph << "\"/>\n</g>\n";

    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    const int n_ticks = 5;
    for (int i = 0; i <= n_ticks; ++i) {
        const double xv = x_min + (x_max - x_min) * i / n_ticks;
        const double yv = y_min + (y_max - y_min) * i / n_ticks;
        svg << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(top + ph + 16)
            << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n"
            << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(sy(yv) + 4)
            << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
    if (!title.empty())
        svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
            << escape(title) << "</text>\n";
    if (!x_label.empty())
        svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << height - 8
            << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    if (!y_label.empty())
        svg << "<text x=\"14\" y=\"" << fmt(top + ph / 2)
            << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << fmt(top + ph / 2)
            << ")\">" << escape(y_label) << "</text>\n";
    svg << "</g>\n";

    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < x.size(); ++i) {
            if (i) svg << ' ';
            svg << fmt(sx(x[i])) << ',' << fmt(sy(series[s].y[i]));
        }
        svg << "\"/>\n";
    }

    // legend
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const double ly = top + 8 + 16.0 * static_cast<double>(s);
        svg << "<line x1=\"" << fmt(left + pw - 110) << "\" y1=\"" << fmt(ly) << "\" x2=\""
            << fmt(left + pw - 90) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n"
            << "<text x=\"" << fmt(left + pw - 84) << "\" y=\"" << fmt(ly + 4) << "\">"
            << escape(series[s].name) << "</text>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

void LinePlot::save(const std::string& path) const {
    const std::string content = render();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("LinePlot: cannot open " + path);
    out << content;
    if (!out) throw IoError("LinePlot: write failed for " + path);
}

}  // namespace leaklock

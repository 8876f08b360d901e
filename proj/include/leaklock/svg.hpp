#pragma once

#include <string>
#include <vector>

#include "leaklock/common.hpp"

namespace leaklock {

/// Minimal standalone SVG line plot: one polyline per series over a shared
/// x vector, with axes, tick labels, and a legend.
struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    struct Series {
        std::string name;
        std::vector<double> y;
    };
    std::vector<Series> series;
    int width = 720;
    int height = 440;

    std::string render() const;
    void save(const std::string& path) const;
};

}  // namespace leaklock

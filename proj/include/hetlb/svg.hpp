#pragma once

#include <optional>
#include <string>
#include <vector>

namespace hetlb::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;  // non-finite values break the line
    bool markers = false;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    bool log_x = false;
    bool log_y = false;
    // Values above y_max (and the axis) are clipped.
    std::optional<double> y_max;
    std::optional<double> y_min;
};

// z[row][col] over ys[row], xs[col]; nullopt cells are drawn grey.
struct Heatmap {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<std::vector<std::optional<double>>> z;
    std::optional<double> z_max;
    // Highlighted cell, e.g. the optimum.
    std::optional<std::pair<double, double>> mark;
};

std::string render(const LinePlot& plot);
std::string render(const Heatmap& map);

}  // namespace hetlb::svg

#include "hetlb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace hetlb::svg {

namespace {

constexpr double kWidth = 680, kHeight = 440;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 55;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

struct Axis {
    double lo, hi;
    bool log;

    double t(double v) const {
        if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        return (v - lo) / (hi - lo);
    }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            for (double p = std::floor(std::log10(lo)); p <= std::ceil(std::log10(hi)); p += 1.0) {
                const double v = std::pow(10.0, p);
                if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) out.push_back(v);
            }
            return out;
        }
        const double raw = (hi - lo) / 6.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0}) {
            step = m * mag;
            if (step >= raw) break;
        }
        for (double v = std::ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) out.push_back(v);
        return out;
    }
};

Axis make_axis(double lo, double hi, bool log) {
    if (!(lo < hi)) {
        const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
        lo -= pad;
        hi += pad;
    }
    if (log) {
        lo = std::pow(10.0, std::floor(std::log10(lo)));
        hi = std::pow(10.0, std::ceil(std::log10(hi)));
    }
    return {lo, hi, log};
}

void frame(std::ostringstream& o, const std::string& title, const std::string& xl, const std::string& yl,
           const Axis& ax, const Axis& ay) {
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : ax.ticks()) {
        const double x = kLeft + ax.t(v) * pw;
        o << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(kTop + ph + 5) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
          << tick_label(v) << "</text>\n";
    }
    for (double v : ay.ticks()) {
        const double y = kTop + (1.0 - ay.t(v)) * ph;
        o << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft << "\" y2=\""
          << num(y) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
          << tick_label(v) << "</text>\n";
    }
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape(xl) << "</text>\n";
    o << "<text transform=\"translate(18," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(yl) << "</text>\n";
}

}  // namespace

std::string render(const LinePlot& plot) {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (const auto& s : plot.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (plot.log_x && s.x[i] <= 0) continue;
            if (plot.log_y && s.y[i] <= 0) continue;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    }
    if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    if (plot.y_max) yhi = std::min(yhi, *plot.y_max);
    if (plot.y_min) ylo = plot.log_y ? std::max(ylo, *plot.y_min) : *plot.y_min;
    if (!plot.log_y && !plot.y_min) ylo = std::min(ylo, 0.0);
    const Axis ax = make_axis(xlo, xhi, plot.log_x);
    const Axis ay = make_axis(ylo, yhi, plot.log_y);

    std::ostringstream o;
    frame(o, plot.title, plot.x_label, plot.y_label, ax, ay);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.t(v) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - ay.t(std::clamp(v, ay.lo, ay.hi))) * ph; };

    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const char* color = kPalette[si % std::size(kPalette)];
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const bool ok = std::isfinite(s.x[i]) && std::isfinite(s.y[i]) && (!plot.log_x || s.x[i] > 0) &&
                            (!plot.log_y || s.y[i] > 0);
            if (!ok) {
                pen = false;
                continue;
            }
            path += (pen ? " L" : " M") + num(px(s.x[i])) + " " + num(py(s.y[i]));
            pen = true;
            if (s.markers) {
                o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\""
                  << color << "\"/>\n";
            }
        }
        if (!path.empty()) {
            o << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << color
              << "\" stroke-width=\"1.8\"/>\n";
        }
        const double ly = kTop + 14 + 18.0 * static_cast<double>(si);
        const double lx = kWidth - kRight + 12;
        o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22) << "\" y2=\""
          << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
        o << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string render(const Heatmap& map) {
    double zlo = std::numeric_limits<double>::infinity(), zhi = -zlo;
    for (const auto& row : map.z) {
        for (const auto& v : row) {
            if (v && std::isfinite(*v)) {
                zlo = std::min(zlo, *v);
                zhi = std::max(zhi, *v);
            }
        }
    }
    if (map.z_max) zhi = std::min(zhi, *map.z_max);
    if (!(zlo < zhi)) zhi = zlo + 1.0;
    const double xlo = map.xs.empty() ? 0.0 : map.xs.front(), xhi = map.xs.empty() ? 1.0 : map.xs.back();
    const double ylo = map.ys.empty() ? 0.0 : map.ys.front(), yhi = map.ys.empty() ? 1.0 : map.ys.back();
    const Axis ax = make_axis(xlo, xhi, false);
    const Axis ay = make_axis(ylo, yhi, false);

    std::ostringstream o;
    frame(o, map.title, map.x_label, map.y_label, ax, ay);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const double cw = map.xs.size() > 1 ? pw / static_cast<double>(map.xs.size() - 1) : pw;
    const double ch = map.ys.size() > 1 ? ph / static_cast<double>(map.ys.size() - 1) : ph;
    auto color = [&](double v) {
        const double t = std::clamp((v - zlo) / (zhi - zlo), 0.0, 1.0);
        const int r = static_cast<int>(255 * t);
        const int g = static_cast<int>(200 * (1 - std::abs(2 * t - 1)));
        const int b = static_cast<int>(255 * (1 - t));
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };
    for (std::size_t iy = 0; iy < map.ys.size() && iy < map.z.size(); ++iy) {
        for (std::size_t ix = 0; ix < map.xs.size() && ix < map.z[iy].size(); ++ix) {
            const auto& v = map.z[iy][ix];
            const double cx = kLeft + ax.t(map.xs[ix]) * pw - cw / 2;
            const double cy = kTop + (1.0 - ay.t(map.ys[iy])) * ph - ch / 2;
            const std::string fill = v && std::isfinite(*v) ? color(*v) : "#d0d0d0";
            o << "<rect x=\"" << num(std::max(cx, kLeft)) << "\" y=\"" << num(std::max(cy, kTop))
              << "\" width=\"" << num(cw) << "\" height=\"" << num(ch) << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    if (map.mark) {
        o << "<circle cx=\"" << num(kLeft + ax.t(map.mark->first) * pw) << "\" cy=\""
          << num(kTop + (1.0 - ay.t(map.mark->second)) * ph)
          << "\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
    }
    const double lx = kWidth - kRight + 20;
    for (int i = 0; i <= 10; ++i) {
        const double v = zlo + (zhi - zlo) * i / 10.0;
        const double y = kTop + ph - ph * i / 10.0;
        o << "<rect x=\"" << num(lx) << "\" y=\"" << num(y - ph / 10) << "\" width=\"20\" height=\""
          << num(ph / 10) << "\" fill=\"" << color(v) << "\"/>";
        if (i % 2 == 0) {
            o << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(y - ph / 20 + 4) << "\">" << tick_label(v)
              << "</text>";
        }
        o << "\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace hetlb::svg

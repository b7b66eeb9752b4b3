#include "zipgrid/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "zipgrid/errors.hpp"

namespace zipgrid {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 420.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 36.0;
constexpr double kMarginBottom = 48.0;

struct Range {
    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();

    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (lo > hi) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            const double mid = 0.5 * (lo + hi);
            lo = mid - 0.5;
            hi = mid + 0.5;
        } else {
            const double margin = 0.05 * (hi - lo);
            lo -= margin;
            hi += margin;
        }
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::vector<double> ticks(const Range& r, int count) {
    std::vector<double> out;
    const double raw = (r.hi - r.lo) / count;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    }
    const double first = std::ceil(r.lo / step) * step;
    for (double v = first; v <= r.hi + 0.5 * step; v += step)
        out.push_back(std::abs(v) < 1e-3 * step ? 0.0 : v);
    return out;
}

} // namespace

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label,
                         const std::string& y_label,
                         const std::vector<PlotSeries>& series) {
    Range xr, yr;
    for (const PlotSeries& s : series) {
        for (double v : s.x) xr.include(v);
        for (double v : s.y) yr.include(v);
    }
    xr.pad();
    yr.pad();

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto sx = [&](double v) {
        return kMarginLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w;
    };
    auto sy = [&](double v) {
        return kMarginTop + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
    };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << title
        << "</text>\n";

    // Axes with ticks and grid lines.
    for (double t : ticks(xr, 6)) {
        const double x = sx(t);
        out << "<line x1=\"" << x << "\" y1=\"" << kMarginTop << "\" x2=\"" << x
            << "\" y2=\"" << kMarginTop + plot_h
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << kMarginTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << fmt(t) << "</text>\n";
    }
    for (double t : ticks(yr, 5)) {
        const double y = sy(t);
        out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << y << "\" x2=\""
            << kMarginLeft + plot_w << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << fmt(t) << "</text>\n";
    }
    out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
        << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\""
        << kHeight - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\" transform=\"rotate(-90 16 "
        << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

    double legend_y = kMarginTop + 14;
    for (const PlotSeries& s : series) {
        if (s.x.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.4\"";
        if (s.dashed) out << " stroke-dasharray=\"6,4\"";
        out << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
        out << "\"/>\n";
        if (!s.label.empty()) {
            out << "<line x1=\"" << kMarginLeft + plot_w - 110 << "\" y1=\""
                << legend_y - 4 << "\" x2=\"" << kMarginLeft + plot_w - 86
                << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color
                << "\" stroke-width=\"1.4\""
                << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
            out << "<text x=\"" << kMarginLeft + plot_w - 80 << "\" y=\""
                << legend_y
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
                << "</text>\n";
            legend_y += 16;
        }
    }
    out << "</svg>\n";
}

} // namespace zipgrid

#ifndef ZIPGRID_SVGPLOT_HPP
#define ZIPGRID_SVGPLOT_HPP

#include <string>
#include <vector>

namespace zipgrid {

// Minimal SVG line plot, enough for the three-panel trajectory figures.
struct PlotSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#000000";
    bool dashed = false;
    std::string label;
};

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label,
                         const std::string& y_label,
                         const std::vector<PlotSeries>& series);

} // namespace zipgrid

#endif

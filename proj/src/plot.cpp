#include "pcbias/plot.hpp"

#include "pcbias/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pcbias {

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;

const char* color(std::size_t i) {
    static const char* pal[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return pal[i % 10];
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string svg_line_plot(const PlotSpec& spec, const std::vector<Series>& series) {
    auto ok = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0); };
    auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
            if (ok(s.x[i], s.y[i])) {
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, ty(s.y[i]));
                y1 = std::max(y1, ty(s.y[i]));
            }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + (1 - (ty(y) - y0) / (y1 - y0)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
       << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
        const double yv = spec.log_y ? std::pow(10.0, fy) : fy;
        os << "<text x=\"" << px(fx) << "\" y=\"" << kTop + ph + 15 << "\" text-anchor=\"middle\">" << num(fx)
           << "</text>\n";
        os << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + (1 - k / 4.0) * ph + 4 << "\" text-anchor=\"end\">"
           << num(yv) << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
       << escape(spec.xlabel) << "</text>\n";
    os << "<text x=\"15\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
       << kTop + ph / 2 << ")\">" << escape(spec.ylabel) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        os << "<polyline fill=\"none\" stroke=\"" << color(s) << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i)
            if (ok(series[s].x[i], series[s].y[i]))
                os << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
        os << "\"/>\n";
        const double ly = kTop + 12 + 16 * static_cast<double>(s);
        os << "<line x1=\"" << kW - kRight + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kW - kRight + 30
           << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color(s) << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kW - kRight + 35 << "\" y=\"" << ly << "\">" << escape(series[s].name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace pcbias

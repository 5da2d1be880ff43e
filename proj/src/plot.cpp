#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "blindsr/bench.hpp"

namespace blindsr::bench {

namespace {

std::string num(double v, int digits = 2)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string escape(const std::string& text)
{
    std::string out;
    for (char c : text) {
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

std::string grey(double v)
{
    const int level = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    char      buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", level, level, level);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string heatmap_svg(const ResultGrid& grid, const std::string& title, const Overlay& overlay)
{
    const Index rows = grid.values.rows();
    const Index cols = grid.values.cols();
    if (rows == 0 || cols == 0 || static_cast<Index>(grid.row_values.size()) != rows ||
        static_cast<Index>(grid.col_values.size()) != cols) {
        throw ValidationError("heatmap: grid is empty or inconsistent");
    }
    const double cell = 32.0, left = 60.0, top = 40.0;
    const double width = left + cols * cell + 20.0, height = top + rows * cell + 50.0;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width, 0) << "\" height=\""
       << num(height, 0) << "\" viewBox=\"0 0 " << num(width, 0) << ' ' << num(height, 0) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    os << "<text x=\"" << num(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";

    // Row 0 sits at the bottom so the row axis increases upward.
    auto cx = [&](double j) { return left + j * cell; };
    auto cy = [&](double i) { return top + (rows - 1 - i) * cell; };
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            const double v = grid.values(i, j);
            os << "<rect class=\"cell\" x=\"" << num(cx(j)) << "\" y=\"" << num(cy(i))
               << "\" width=\"" << num(cell) << "\" height=\"" << num(cell) << "\" fill=\""
               << grey(v) << "\" data-row=\"" << linalg::format_double(grid.row_values[i])
               << "\" data-col=\"" << linalg::format_double(grid.col_values[j])
               << "\" data-value=\"" << linalg::format_double(v) << "\"/>\n";
        }
    }
    for (Index j = 0; j < cols; ++j) {
        os << "<text x=\"" << num(cx(j) + cell / 2) << "\" y=\"" << num(top + rows * cell + 16)
           << "\" text-anchor=\"middle\" font-size=\"11\">"
           << linalg::format_double(grid.col_values[j]) << "</text>\n";
    }
    for (Index i = 0; i < rows; ++i) {
        os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(cy(i) + cell / 2 + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << linalg::format_double(grid.row_values[i])
           << "</text>\n";
    }
    os << "<text x=\"" << num(left + cols * cell / 2) << "\" y=\"" << num(height - 8)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(grid.col_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << num(top + rows * cell / 2)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(grid.row_label) << "</text>\n";

    if (overlay.kind != Overlay::Kind::none && rows > 1 && cols > 1) {
        // Axis values map linearly onto cell centres (grids are uniformly spaced).
        const double r0 = grid.row_values.front(), dr = (grid.row_values.back() - r0) / (rows - 1);
        const double c0 = grid.col_values.front(), dc = (grid.col_values.back() - c0) / (cols - 1);
        const double xmin = cx(0), xmax = cx(cols), ymin = top, ymax = top + rows * cell;
        std::ostringstream pts;
        const int          samples = 200;
        for (int t = 0; t <= samples; ++t) {
            const double col = c0 - 0.5 * dc + (cols * dc) * t / samples;
            if (col <= 0.0 && overlay.kind == Overlay::Kind::hyperbola) continue;
            const double row = overlay.kind == Overlay::Kind::hyperbola ? overlay.constant / col
                                                                        : overlay.constant * col;
            const double x = cx((col - c0) / dc) + cell / 2;
            const double y = cy((row - r0) / dr) + cell / 2;
            if (x < xmin || x > xmax || y < ymin || y > ymax) continue;
            pts << num(x) << ',' << num(y) << ' ';
        }
        os << "<polyline class=\"overlay\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\""
           << pts.str() << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label, bool log_y)
{
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw ValidationError("line chart: x and y lengths differ");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = ty(s.y[i]);
            if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    }
    if (!(xlo <= xhi)) throw ValidationError("line chart: no finite points");
    if (xhi == xlo) xhi = xlo + 1.0;
    if (yhi == ylo) {
        ylo -= 0.5;
        yhi += 0.5;
    }

    const double W = 640, H = 400, left = 70, right = 180, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double x) { return left + (x - xlo) / (xhi - xlo) * pw; };
    auto py = [&](double y) { return top + (yhi - y) / (yhi - ylo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
       << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xlo + (xhi - xlo) * t / 4, yv = ylo + (yhi - ylo) * t / 4;
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 16)
           << "\" text-anchor=\"middle\" font-size=\"10\">" << num(xv, 3) << "</text>\n";
        os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(yv) + 3)
           << "\" text-anchor=\"end\" font-size=\"10\">" << num(yv, 2) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 10)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label) << "</text>\n";
    os << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << num(top + ph / 2) << ")\">" << escape(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s     = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        os << "<polyline class=\"series\" data-label=\"" << escape(s.label)
           << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (s.dashed) os << " stroke-dasharray=\"6 3\"";
        os << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = ty(s.y[i]);
            if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
            os << num(px(s.x[i])) << ',' << num(py(y)) << ' ';
        }
        os << "\"/>\n";
        const double ly = top + 12 + 16.0 * k;
        os << "<line x1=\"" << num(W - right + 10) << "\" y1=\"" << num(ly) << "\" x2=\""
           << num(W - right + 34) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\""
           << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
        os << "<text x=\"" << num(W - right + 40) << "\" y=\"" << num(ly + 4)
           << "\" font-size=\"10\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace blindsr::bench

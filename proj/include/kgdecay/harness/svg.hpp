#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace kgdecay::harness {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x, y;  ///< y already in plot units
    bool dashed = false;
};

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

inline std::string tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace detail

/// Line plot; `log_y` labels the y ticks as powers of ten.
inline void write_line_plot(std::ostream& os, const std::string& title, const std::string& xlabel,
                            const std::string& ylabel, const std::vector<Series>& series, bool log_y) {
    const double W = 720, H = 440, L = 80, Rm = 20, T = 40, B = 60;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) x0 = 0, x1 = 1;
    if (!(y1 > y0)) y0 -= 1, y1 += 1;
    if (log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - Rm); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    using detail::num;

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(title) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double x = x0 + (x1 - x0) * k / 5.0;
        os << "<text x=\"" << num(px(x)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << detail::tick(x) << "</text>\n";
    }
    const int ny = log_y ? std::min(10, static_cast<int>(y1 - y0)) : 5;
    for (int k = 0; k <= ny; ++k) {
        double y = y0 + (y1 - y0) * k / ny;
        if (log_y) y = std::round(y);
        const std::string label = log_y ? "1e" + detail::tick(y) : detail::tick(y);
        os << "<line x1=\"" << L << "\" y1=\"" << num(py(y)) << "\" x2=\"" << W - Rm << "\" y2=\"" << num(py(y))
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">" << detail::escape(xlabel) << "</text>\n";
    os << "<text transform=\"translate(18," << H / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << detail::escape(ylabel) << "</text>\n";
    int legend = 0;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
           << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i])) os << num(px(s.x[i])) << ',' << num(py(std::clamp(s.y[i], y0, y1))) << ' ';
        os << "\"/>\n";
        const double ly = T + 14 + 16 * legend++;
        os << "<line x1=\"" << W - 200 << "\" y1=\"" << ly << "\" x2=\"" << W - 176 << "\" y2=\"" << ly << "\" stroke=\""
           << s.color << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
        os << "<text x=\"" << W - 170 << "\" y=\"" << ly + 4 << "\">" << detail::escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
}

/// Horizontal bars of log10 of each value.
inline void write_bar_plot(std::ostream& os, const std::string& title, const std::vector<std::string>& labels,
                           const std::vector<double>& values) {
    const double W = 720, row = 22, L = 260, T = 44;
    const double H = T + row * static_cast<double>(labels.size()) + 40;
    double lo = -16.0, hi = 0.0;
    for (double v : values)
        if (v > 0.0) lo = std::min(lo, std::floor(std::log10(v))), hi = std::max(hi, std::ceil(std::log10(v)));
    auto px = [&](double e) { return L + (e - lo) / (hi - lo) * (W - L - 30); };
    using detail::num;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(title) << "</text>\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = T + row * static_cast<double>(i);
        const double e = values[i] > 0.0 ? std::max(lo, std::log10(values[i])) : lo;
        os << "<text x=\"" << L - 8 << "\" y=\"" << num(y + 14) << "\" text-anchor=\"end\">" << detail::escape(labels[i]) << "</text>\n";
        os << "<rect x=\"" << L << "\" y=\"" << num(y + 3) << "\" width=\"" << num(px(e) - L) << "\" height=\"" << row - 6
           << "\" fill=\"#4a7ab5\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2e", values[i]);
        os << "<text x=\"" << num(px(e) + 4) << "\" y=\"" << num(y + 14) << "\">" << buf << "</text>\n";
    }
    const double axis_y = T + row * static_cast<double>(labels.size()) + 4;
    for (double e = lo; e <= hi; e += std::max(1.0, std::round((hi - lo) / 8.0)))
        os << "<text x=\"" << num(px(e)) << "\" y=\"" << num(axis_y + 14) << "\" text-anchor=\"middle\">1e"
           << detail::tick(e) << "</text>\n";
    os << "</svg>\n";
}

}  // namespace kgdecay::harness

#include "swarmdmd/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "swarmdmd/error.hpp"

namespace swarmdmd {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kColours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#d62728", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

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

} // namespace

std::string render_log_chart(const std::vector<MetricSeries>& series, const ChartOptions& options) {
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.size(); ++k) {
            t_min = std::min(t_min, s.times[k]);
            t_max = std::max(t_max, s.times[k]);
            if (s.values[k] > 0.0 && std::isfinite(s.values[k])) {
                lo = std::min(lo, std::log10(s.values[k]));
                hi = std::max(hi, std::log10(s.values[k]));
            }
        }
    }
    if (options.threshold && *options.threshold > 0.0) {
        lo = std::min(lo, std::log10(*options.threshold));
        hi = std::max(hi, std::log10(*options.threshold));
    }
    if (!std::isfinite(t_min)) {
        t_min = 0.0;
        t_max = 1.0;
    }
    if (t_max <= t_min) t_max = t_min + 1.0;
    if (!std::isfinite(lo)) {
        lo = -16.0;
        hi = 0.0;
    }
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) hi = lo + 1.0;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double t) { return kLeft + (t - t_min) / (t_max - t_min) * plot_w; };
    auto py = [&](double v) {
        const double e = (v > 0.0 && std::isfinite(v)) ? std::clamp(std::log10(v), lo, hi) : lo;
        return kTop + (hi - e) / (hi - lo) * plot_h;
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fmt(kLeft) << "\" y=\"24\" font-size=\"14\">" << escape(options.title) << "</text>\n";

    const int decades = static_cast<int>(hi - lo);
    const int step = std::max(1, decades / 8);
    for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
        const double y = kTop + (hi - e) / (hi - lo) * plot_h;
        os << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft + plot_w) << "\" y2=\""
           << fmt(y) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">1e" << e
           << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double t = t_min + (t_max - t_min) * i / 5.0;
        const double x = px(t);
        os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + plot_h + 16) << "\" text-anchor=\"middle\">"
           << fmt(t) << "</text>\n";
    }
    os << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(plot_w) << "\" height=\""
       << fmt(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 12)
       << "\" text-anchor=\"middle\">t (s)</text>\n";
    os << "<text transform=\"translate(16," << fmt(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(options.y_label) << "</text>\n";

    if (options.marker_time && *options.marker_time >= t_min && *options.marker_time <= t_max) {
        const double x = px(*options.marker_time);
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(x) << "\" y2=\""
           << fmt(kTop + plot_h) << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
    if (options.threshold && *options.threshold > 0.0) {
        const double y = py(*options.threshold);
        os << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft + plot_w) << "\" y2=\""
           << fmt(y) << "\" stroke=\"#d62728\" stroke-dasharray=\"2 2\"/>\n";
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = kColours[s % std::size(kColours)];
        const auto& ser = series[s];
        if (ser.size() > 0) {
            os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = 0; k < ser.size(); ++k) {
                if (k) os << ' ';
                os << fmt(px(ser.times[k])) << ',' << fmt(py(ser.values[k]));
            }
            os << "\"/>\n";
        }
        const double ly = kTop + 14.0 * static_cast<double>(s) + 8.0;
        os << "<line x1=\"" << fmt(kLeft + plot_w + 10) << "\" y1=\"" << fmt(ly) << "\" x2=\""
           << fmt(kLeft + plot_w + 28) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << colour
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt(kLeft + plot_w + 32) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(ser.metric)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void save_log_chart(const std::vector<MetricSeries>& series, const ChartOptions& options,
                    const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << render_log_chart(series, options);
}

} // namespace swarmdmd

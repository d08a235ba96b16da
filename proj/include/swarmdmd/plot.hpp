#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swarmdmd/metrics.hpp"

namespace swarmdmd {

struct ChartOptions {
    std::string title;
    std::string y_label = "error";
    std::optional<double> marker_time; // vertical line, e.g. end of training
    std::optional<double> threshold;   // horizontal line
};

/// Static SVG line chart with a log10 y axis. Non-positive values are drawn
/// at the bottom of the axis.
std::string render_log_chart(const std::vector<MetricSeries>& series, const ChartOptions& options);
void save_log_chart(const std::vector<MetricSeries>& series, const ChartOptions& options,
                    const std::filesystem::path& path);

} // namespace swarmdmd

#include "swarmdmd/metrics.hpp"

#include <cmath>
#include <fstream>

#include "swarmdmd/error.hpp"
#include "swarmdmd/io.hpp"
#include "swarmdmd/observables.hpp"

namespace swarmdmd {

namespace {

using Index = Eigen::Index;

struct Overlap {
    std::size_t truth_first;
    std::size_t count;
};

Overlap overlap(const SwarmTrajectory& truth, const SwarmTrajectory& test) {
    if (truth.size() == 0 || test.size() == 0) {
        throw InvalidArgument("cannot compare empty trajectories");
    }
    if (truth.agent_count() != test.agent_count()) {
        throw InvalidArgument("trajectories differ in agent count (" + std::to_string(truth.agent_count()) + " vs " +
                              std::to_string(test.agent_count()) + ")");
    }
    if (std::abs(truth.dt - test.dt) > 1e-9 * truth.dt) {
        throw InvalidArgument("trajectories differ in dt");
    }
    const auto first = truth.index_of(test.start_time());
    if (!first) {
        throw InvalidArgument("test trajectory does not start on the truth time grid");
    }
    return {*first, std::min(truth.size() - *first, test.size())};
}

template <class F>
MetricSeries per_snapshot_error(const std::string& name, const SwarmTrajectory& truth, const SwarmTrajectory& test,
                                F&& agent_error) {
    const auto ov = overlap(truth, test);
    MetricSeries out;
    out.metric = name;
    out.times.reserve(ov.count);
    out.values.reserve(ov.count);
    for (std::size_t k = 0; k < ov.count; ++k) {
        const auto& a = truth.snapshots[ov.truth_first + k];
        const auto& b = test.snapshots[k];
        double sum = 0.0;
        for (std::size_t i = 0; i < a.agents.size(); ++i) {
            sum += agent_error(a.agents[i], b.agents[i]);
        }
        out.times.push_back(a.time);
        out.values.push_back(sum / static_cast<double>(a.agents.size()));
    }
    return out;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

} // namespace

void MetricSeries::validate() const {
    if (times.size() != values.size()) {
        throw InvalidArgument("metric series '" + metric + "' has mismatched lengths");
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(values[k])) {
            throw InvalidArgument("metric series '" + metric + "' has a non-finite value");
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw InvalidArgument("metric series '" + metric + "' times are not strictly increasing");
        }
    }
}

MetricSeries position_error(const SwarmTrajectory& truth, const SwarmTrajectory& test) {
    return per_snapshot_error("position_error", truth, test, [](const AgentState& a, const AgentState& b) {
        return (a.position - b.position).norm();
    });
}

MetricSeries heading_error(const SwarmTrajectory& truth, const SwarmTrajectory& test) {
    return per_snapshot_error("heading_error", truth, test, [](const AgentState& a, const AgentState& b) {
        return std::abs(wrap_angle(b.heading - a.heading));
    });
}

std::optional<double> polarisation(const Eigen::Matrix2Xd& velocities) {
    double denom = 0.0;
    for (Index i = 0; i < velocities.cols(); ++i) denom += velocities.col(i).norm();
    if (!(denom > 0.0)) {
        return std::nullopt;
    }
    return velocities.rowwise().sum().norm() / denom;
}

std::optional<double> angular_momentum(const Eigen::Matrix2Xd& positions, const Eigen::Matrix2Xd& velocities,
                                       bool centered) {
    if (positions.cols() != velocities.cols()) {
        throw InvalidArgument("positions and velocities differ in agent count");
    }
    Eigen::Matrix2Xd p = positions;
    if (centered && p.cols() > 0) {
        p.colwise() -= p.rowwise().mean();
    }
    double num = 0.0;
    double denom = 0.0;
    for (Index i = 0; i < p.cols(); ++i) {
        num += p(0, i) * velocities(1, i) - p(1, i) * velocities(0, i);
        denom += p.col(i).norm() * velocities.col(i).norm();
    }
    if (!(denom > 0.0)) {
        return std::nullopt;
    }
    return std::abs(num) / denom;
}

MetricSeries polarisation_series(const SwarmTrajectory& traj) {
    MetricSeries out;
    out.metric = "polarisation";
    const auto v = velocity_from_positions(traj);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (auto p = polarisation(v[k])) {
            out.times.push_back(traj.snapshots[k].time);
            out.values.push_back(*p);
        }
    }
    return out;
}

MetricSeries angular_momentum_series(const SwarmTrajectory& traj, bool centered) {
    MetricSeries out;
    out.metric = "angular_momentum";
    const auto v = velocity_from_positions(traj);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (auto m = angular_momentum(positions_of(traj.snapshots[k]), v[k], centered)) {
            out.times.push_back(traj.snapshots[k].time);
            out.values.push_back(*m);
        }
    }
    return out;
}

MetricSeries metric_error_series(const MetricSeries& truth, const MetricSeries& test) {
    if (truth.size() != test.size()) {
        throw InvalidArgument("metric series are misaligned (" + std::to_string(truth.size()) + " vs " +
                              std::to_string(test.size()) + " samples)");
    }
    MetricSeries out;
    out.metric = truth.metric + "_error";
    out.times = truth.times;
    out.values.resize(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (!same_time(truth.times[k], test.times[k])) {
            throw InvalidArgument("metric series are misaligned at sample " + std::to_string(k));
        }
        out.values[k] = std::abs(truth.values[k] - test.values[k]);
    }
    return out;
}

void align_series(MetricSeries& a, MetricSeries& b) {
    MetricSeries ka{a.metric, {}, {}}, kb{b.metric, {}, {}};
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (same_time(a.times[i], b.times[j])) {
            ka.times.push_back(a.times[i]);
            ka.values.push_back(a.values[i]);
            kb.times.push_back(b.times[j]);
            kb.values.push_back(b.values[j]);
            ++i;
            ++j;
        } else if (a.times[i] < b.times[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    a = std::move(ka);
    b = std::move(kb);
}

DensityGridSpec DensityGridSpec::for_radius(double interaction_radius) {
    DensityGridSpec spec;
    spec.bins = 21;
    spec.spacing = 4.0 * interaction_radius / 21.0;
    spec.width = spec.spacing;
    return spec;
}

void DensityGridSpec::validate() const {
    if (bins == 0 || bins % 2 == 0) {
        throw InvalidArgument("density grid needs an odd, positive number of bins per side");
    }
    if (!(spacing > 0.0) || !(width > 0.0)) {
        throw InvalidArgument("density grid spacing and width must be > 0");
    }
}

DensityGrid neighbor_density(const SwarmTrajectory& traj, double t_begin, double t_end, const DensityGridSpec& spec) {
    spec.validate();
    const auto bins = static_cast<Index>(spec.bins);
    const double centre = 0.5 * static_cast<double>(spec.bins - 1);
    const double extent = spec.half_extent();
    const double half_w = 0.5 * spec.width;
    const double tol = 1e-9 * std::max(1.0, std::abs(t_end));

    auto bin_range = [&](double offset) {
        // Bins a with c_a - w/2 <= offset < c_a + w/2, c_a = (a - centre) d.
        const auto lo = static_cast<Index>(std::floor((offset - half_w) / spec.spacing + centre)) + 1;
        const auto hi = static_cast<Index>(std::floor((offset + half_w) / spec.spacing + centre));
        return std::pair<Index, Index>{std::max<Index>(lo, 0), std::min<Index>(hi, bins - 1)};
    };

    DensityGrid out;
    out.spacing = spec.spacing;
    out.width = spec.width;
    out.grid = Eigen::MatrixXd::Zero(bins, bins);

    Eigen::MatrixXd step_grid(bins, bins);
    Eigen::MatrixXd agent_grid(bins, bins);
    std::size_t used_steps = 0;
    for (const auto& snap : traj.snapshots) {
        if (snap.time < t_begin - tol || snap.time > t_end + tol) continue;
        step_grid.setZero();
        std::size_t focal_count = 0;
        for (std::size_t i = 0; i < snap.agents.size(); ++i) {
            const auto& focal = snap.agents[i];
            const double c = std::cos(focal.heading);
            const double s = std::sin(focal.heading);
            agent_grid.setZero();
            std::size_t neighbours = 0;
            for (std::size_t j = 0; j < snap.agents.size(); ++j) {
                if (j == i) continue;
                Eigen::Vector2d rel = snap.agents[j].position - focal.position;
                if (spec.frame == DensityFrame::heading) {
                    rel = Eigen::Vector2d(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y());
                }
                if (rel.x() < -extent || rel.x() >= extent || rel.y() < -extent || rel.y() >= extent) continue;
                ++neighbours;
                const auto [xa, xb] = bin_range(rel.x());
                const auto [ya, yb] = bin_range(rel.y());
                for (Index row = ya; row <= yb; ++row) {
                    for (Index col = xa; col <= xb; ++col) {
                        agent_grid(row, col) += 1.0;
                    }
                }
            }
            if (neighbours == 0) continue;
            step_grid += agent_grid / static_cast<double>(neighbours);
            ++focal_count;
        }
        if (focal_count == 0) continue;
        out.grid += step_grid / static_cast<double>(focal_count);
        ++used_steps;
    }
    if (used_steps == 0) {
        out.empty = true;
        return out;
    }
    out.grid /= static_cast<double>(used_steps);
    return out;
}

SeriesSummary summarize(const MetricSeries& series, double train_end, double threshold) {
    const double tol = 1e-9 * std::max(1.0, std::abs(train_end));
    SeriesSummary out;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double t = series.times[k];
        if (t <= train_end + tol) {
            sum += series.values[k];
            ++count;
        }
        if (t >= train_end - tol && !out.time_below && series.values[k] > threshold) {
            out.time_below = std::max(0.0, t - train_end);
        }
    }
    out.train_mean = count ? sum / static_cast<double>(count) : 0.0;
    return out;
}

void save_series(const MetricSeries& series, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << "t,value\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        os << format_double(series.times[k]) << ',' << format_double(series.values[k]) << '\n';
    }
}

void save_density(const DensityGrid& grid, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << "spacing," << format_double(grid.spacing) << '\n';
    os << "width," << format_double(grid.width) << '\n';
    for (Index r = 0; r < grid.grid.rows(); ++r) {
        for (Index c = 0; c < grid.grid.cols(); ++c) {
            if (c) os << ',';
            os << format_double(grid.grid(r, c));
        }
        os << '\n';
    }
}

} // namespace swarmdmd

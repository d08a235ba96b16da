#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swarmdmd/types.hpp"

namespace swarmdmd {

struct MetricSeries {
    std::string metric;
    std::vector<double> times;
    std::vector<double> values;

    std::size_t size() const { return times.size(); }
    /// Throws InvalidArgument unless values are finite and times increase.
    void validate() const;
};

/// Mean over agents of the Euclidean position error, over the time range the
/// two trajectories share. `test` must start on a grid point of `truth`.
MetricSeries position_error(const SwarmTrajectory& truth, const SwarmTrajectory& test);

/// Mean over agents of |wrap(theta_test - theta_truth)|, in [0, pi].
MetricSeries heading_error(const SwarmTrajectory& truth, const SwarmTrajectory& test);

/// |sum v| / sum |v|; empty when every velocity is zero.
std::optional<double> polarisation(const Eigen::Matrix2Xd& velocities);

/// |sum p x v| / sum |p||v| with the scalar 2D cross product. Positions are
/// taken as given unless `centered`, which subtracts the centroid first.
/// Empty when the denominator vanishes.
std::optional<double> angular_momentum(const Eigen::Matrix2Xd& positions, const Eigen::Matrix2Xd& velocities,
                                       bool centered = false);

/// Per-snapshot series using forward-difference velocities; missing samples
/// are skipped.
MetricSeries polarisation_series(const SwarmTrajectory& traj);
MetricSeries angular_momentum_series(const SwarmTrajectory& traj, bool centered = false);

/// |truth - test| per shared time. Times must match one to one.
MetricSeries metric_error_series(const MetricSeries& truth, const MetricSeries& test);

/// Drops samples whose time is absent from the other series, so that the
/// pair can be passed to metric_error_series.
void align_series(MetricSeries& a, MetricSeries& b);

enum class DensityFrame { world, heading };

struct DensityGridSpec {
    std::size_t bins = 21;  // per side, odd so a bin sits on the focal agent
    double spacing = 0.1;   // centre-to-centre distance d
    double width = 0.1;     // bin width l
    DensityFrame frame = DensityFrame::world;

    /// Defaults: 21 contiguous bins spanning a half-width of 2 * radius.
    static DensityGridSpec for_radius(double interaction_radius);
    double half_extent() const { return 0.5 * static_cast<double>(bins - 1) * spacing + 0.5 * width; }
    void validate() const;
};

struct DensityGrid {
    double spacing = 0.0;
    double width = 0.0;
    /// grid(row, col): row indexes y (ascending), col indexes x (ascending).
    Eigen::MatrixXd grid;
    /// Set when no focal agent had a neighbour anywhere in the window.
    bool empty = false;
};

/// Neighbour occupancy fractions around each focal agent, averaged over
/// agents and over snapshots with t in [t_begin, t_end].
DensityGrid neighbor_density(const SwarmTrajectory& traj, double t_begin, double t_end, const DensityGridSpec& spec);

struct SeriesSummary {
    double train_mean = 0.0;
    /// Seconds after train_end until the first sample above threshold;
    /// empty means the threshold was never exceeded.
    std::optional<double> time_below;
};

SeriesSummary summarize(const MetricSeries& series, double train_end, double threshold);

void save_series(const MetricSeries& series, const std::filesystem::path& path);
void save_density(const DensityGrid& grid, const std::filesystem::path& path);

} // namespace swarmdmd

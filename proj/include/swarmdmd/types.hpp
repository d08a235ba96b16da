#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace swarmdmd {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

struct AgentState {
    Eigen::Vector2d position{0.0, 0.0};
    double heading = 0.0;

    bool operator==(const AgentState&) const = default;
};

struct SwarmSnapshot {
    double time = 0.0;
    std::vector<AgentState> agents;

    std::size_t agent_count() const { return agents.size(); }
    bool operator==(const SwarmSnapshot&) const = default;
};

/// Uniformly sampled swarm history. Agent identity is the index into
/// SwarmSnapshot::agents and never changes across snapshots.
struct SwarmTrajectory {
    double dt = 0.0;
    std::vector<SwarmSnapshot> snapshots;

    std::size_t size() const { return snapshots.size(); }
    std::size_t agent_count() const { return snapshots.empty() ? 0 : snapshots.front().agent_count(); }
    double start_time() const { return snapshots.empty() ? 0.0 : snapshots.front().time; }
    double end_time() const { return snapshots.empty() ? 0.0 : snapshots.back().time; }

    /// Copy of snapshots [first, first + count).
    SwarmTrajectory slice(std::size_t first, std::size_t count) const;

    /// Index of the snapshot at `time`, if it lies on the sampling grid.
    std::optional<std::size_t> index_of(double time) const;

    bool operator==(const SwarmTrajectory&) const = default;
};

/// Ground-truth model parameters. field_of_view and max_turn_rate are only
/// set for the milling variant; unset means full circle / unbounded.
struct SwarmParams {
    std::size_t n_agents = 50;
    double dt = 0.1;
    double density = 16.0;
    double interaction_radius = 0.25;
    std::optional<double> field_of_view;
    std::optional<double> max_turn_rate;
    double noise = 0.0;
    double speed = 0.03;
    std::uint64_t seed = 1;

    /// Throws InvalidArgument listing the first violated invariant.
    void validate() const;
};

struct Violation {
    std::optional<std::size_t> snapshot;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

ValidationReport validate_trajectory(const SwarmTrajectory& traj);

/// Refines the time grid by the integer factor traj.dt / target_dt. Positions
/// are interpolated linearly, headings along the shortest arc.
SwarmTrajectory interpolate_trajectory(const SwarmTrajectory& traj, double target_dt);

/// Keeps the same `target_n` randomly chosen agents in every snapshot,
/// preserving their relative order.
SwarmTrajectory subsample_agents(const SwarmTrajectory& traj, std::size_t target_n, std::uint64_t seed);

/// Agent indices subsample_agents keeps for the given population and seed.
std::vector<std::size_t> sample_agent_indices(std::size_t n, std::size_t target_n, std::uint64_t seed);

/// Snapshot positions as a 2 x N matrix.
Eigen::Matrix2Xd positions_of(const SwarmSnapshot& snapshot);

/// Snapshot headings as an N vector.
Eigen::VectorXd headings_of(const SwarmSnapshot& snapshot);

} // namespace swarmdmd

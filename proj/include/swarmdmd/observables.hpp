#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swarmdmd/types.hpp"

namespace swarmdmd {

/// Variable groups that can make up the augmented feature vector y.
/// The *_signed kinds keep the sign of the pairwise difference; the plain
/// rel_position / rel_velocity kinds use the componentwise absolute value.
enum class FeatureKind {
    position,
    velocity,
    heading,
    rel_position,
    rel_distance,
    rel_heading,
    rel_velocity,
    rel_speed,
    rel_position_signed,
    rel_velocity_signed,
};

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);
bool is_pairwise(FeatureKind kind);

/// Number of feature rows one agent contributes for `kind` in a swarm of n.
std::size_t per_agent_width(FeatureKind kind, std::size_t n_agents);

/// Ordered block layout of y. Inside a block, rows are grouped by component
/// first and agent second: row = block.start + component * N + agent. For the
/// pairwise kinds the component index is (axis * N + j) for vector quantities
/// and j for scalar ones, where j is the other agent.
class FeatureLayout {
  public:
    struct Block {
        FeatureKind kind;
        std::size_t start;
        std::size_t width; // N * per_agent_width

        bool operator==(const Block&) const = default;
    };

    FeatureLayout() = default;
    FeatureLayout(std::vector<FeatureKind> kinds, std::size_t n_agents);

    /// Parses a comma- or whitespace-separated list of kind names.
    static FeatureLayout parse(const std::string& spec, std::size_t n_agents);

    const std::vector<FeatureKind>& kinds() const { return kinds_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    std::size_t n_agents() const { return n_agents_; }
    std::size_t rows() const { return rows_; }
    /// Feature rows per agent (m).
    std::size_t per_agent() const { return n_agents_ == 0 ? 0 : rows_ / n_agents_; }
    const Block& block(FeatureKind kind) const;
    bool contains(FeatureKind kind) const;

    std::size_t row(FeatureKind kind, std::size_t component, std::size_t agent) const;

    /// Kind names joined by ','.
    std::string spec() const;

    bool operator==(const FeatureLayout&) const = default;

  private:
    std::vector<FeatureKind> kinds_;
    std::vector<Block> blocks_;
    std::size_t n_agents_ = 0;
    std::size_t rows_ = 0;
};

/// Swarm state at one instant as needed for feature evaluation.
struct KinematicState {
    Eigen::Matrix2Xd positions;
    Eigen::Matrix2Xd velocities;
    Eigen::VectorXd headings;
};

/// Forward differences v_k = (p_{k+1} - p_k) / dt, last value held.
std::vector<Eigen::Matrix2Xd> velocity_from_positions(const SwarmTrajectory& traj);

/// Backward differences v_k = (p_k - p_{k-1}) / dt with v_0 = (p_1 - p_0) / dt.
std::vector<Eigen::Matrix2Xd> backward_velocities(const SwarmTrajectory& traj);

/// atan2(v_y, v_x); 0 for the zero vector.
double heading_from_velocity(const Eigen::Vector2d& v);

Eigen::VectorXd headings_from_velocities(const Eigen::Matrix2Xd& velocities);

/// Per-agent pairwise block for a rel_* kind: column i holds agent i's values
/// over all j in component-major order; j == i entries are zero.
Eigen::MatrixXd pairwise_features(const KinematicState& state, FeatureKind kind);

/// Writes y for one instant into `out` (length layout.rows()).
void fill_features(const FeatureLayout& layout, const KinematicState& state, Eigen::Ref<Eigen::VectorXd> out);

/// Stacks positions as [x_1..x_N, y_1..y_N].
Eigen::VectorXd stack_positions(const Eigen::Matrix2Xd& positions);
Eigen::Matrix2Xd unstack_positions(const Eigen::Ref<const Eigen::VectorXd>& state);

/// How the next position is propagated from the current one; see rollout.
enum class Dynamics { standard, fo_cartesian, fo_polar };

std::string to_string(Dynamics dynamics);
Dynamics parse_dynamics(const std::string& name);

/// Per-step deterministic displacement (excluding K y) for a dynamics
/// formulation, stacked like the state. Zero for standard dynamics.
Eigen::VectorXd drift_term(Dynamics dynamics, const Eigen::Matrix2Xd& velocities, double dt);

/// Snapshot matrices from a trajectory window. `drift` holds the known part of
/// each displacement (zero for standard dynamics); the regression target for K
/// is S - drift.
struct SnapshotMatrices {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Xprime;
    Eigen::MatrixXd S;
    Eigen::MatrixXd Y;
    Eigen::MatrixXd drift;
    FeatureLayout layout;
    Dynamics dynamics = Dynamics::standard;
    double dt = 0.0;

    Eigen::MatrixXd target() const { return S - drift; }
};

SnapshotMatrices assemble_matrices(const SwarmTrajectory& traj, const FeatureLayout& layout,
                                   Dynamics dynamics = Dynamics::standard);

} // namespace swarmdmd

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swarmdmd/dmd.hpp"
#include "swarmdmd/types.hpp"

namespace swarmdmd {

enum class RolloutMode { basic, reinit };

RolloutMode parse_rollout_mode(const std::string& name);
std::string to_string(RolloutMode mode);

struct RolloutConfig {
    RolloutMode mode = RolloutMode::basic;
    double reinit_period = 0.5;   // g, seconds
    double reinit_horizon = 10.0; // h, seconds
    double duration = 10.0;

    void validate() const;
};

/// Where and when a rollout stopped producing finite states.
struct Divergence {
    double time;
    std::size_t step;
};

struct RolloutTrajectory {
    double start_time = 0.0;
    SwarmTrajectory trajectory;
    std::optional<Divergence> divergence;
};

struct RolloutResult {
    Dynamics dynamics = Dynamics::standard;
    std::vector<RolloutTrajectory> rollouts;
};

/// Closed-loop propagation. The window's snapshots are copied verbatim; from
/// the last one onward each step rebuilds y from the predicted states
/// (backward-difference velocities, headings from those velocities) and
/// applies x_{k+1} = x_k + drift_k + K y_k. `duration` counts from the
/// window's first snapshot. Non-finite states truncate the output and set
/// `divergence`.
RolloutTrajectory rollout(const InteractionModel& model, const SwarmTrajectory& window, double duration);

/// Dispatch helpers that check the model's dynamics tag first.
RolloutTrajectory rollout_standard(const InteractionModel& model, const SwarmTrajectory& window, double duration);
RolloutTrajectory rollout_fo_cartesian(const InteractionModel& model, const SwarmTrajectory& window, double duration);
RolloutTrajectory rollout_fo_polar(const InteractionModel& model, const SwarmTrajectory& window, double duration);

/// Open-loop replay with externally supplied feature columns:
/// x_{k+1} = x_k + K inputs.col(k). Returns the stacked states, one column per
/// step, starting with x0. Only meaningful for standard dynamics.
Eigen::MatrixXd rollout_with_inputs(const InteractionModel& model, const Eigen::VectorXd& x0,
                                    const Eigen::MatrixXd& inputs);

/// Restarts from the ground truth at t0 = 0, g, 2g, ... (while two seed
/// snapshots are available) and runs each rollout for h seconds.
RolloutResult rollout_with_reinit(const InteractionModel& model, const SwarmTrajectory& ground_truth,
                                  const RolloutConfig& config);

/// Basic mode: one rollout from the first two ground-truth snapshots.
RolloutResult rollout_basic(const InteractionModel& model, const SwarmTrajectory& ground_truth,
                            const RolloutConfig& config);

/// One `rollout_<start_ms>.csv` per rollout plus `index.csv` listing
/// start_ms, start time, snapshot count and divergence time.
void save_rollout_result(const RolloutResult& result, const std::filesystem::path& dir);

} // namespace swarmdmd

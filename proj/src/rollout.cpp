#include "swarmdmd/rollout.hpp"

#include <cmath>
#include <fstream>

#include "swarmdmd/error.hpp"
#include "swarmdmd/io.hpp"

namespace swarmdmd {

namespace {

std::size_t steps_for(double duration, double dt) {
    if (!(duration >= 0.0)) {
        throw InvalidArgument("rollout duration must be >= 0");
    }
    const double steps = duration / dt;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-6 * std::max(1.0, steps)) {
        throw InvalidArgument("rollout duration must be an integer multiple of dt");
    }
    return static_cast<std::size_t>(rounded);
}

SwarmSnapshot make_snapshot(double time, const Eigen::Matrix2Xd& positions, const Eigen::Matrix2Xd& velocities) {
    SwarmSnapshot snap;
    snap.time = time;
    snap.agents.resize(static_cast<std::size_t>(positions.cols()));
    for (Eigen::Index i = 0; i < positions.cols(); ++i) {
        snap.agents[static_cast<std::size_t>(i)] = {positions.col(i), heading_from_velocity(velocities.col(i))};
    }
    return snap;
}

void require_dynamics(const InteractionModel& model, Dynamics expected) {
    if (model.dynamics != expected) {
        throw InvalidArgument("model was fit for " + to_string(model.dynamics) + " dynamics, not " +
                              to_string(expected));
    }
}

} // namespace

RolloutMode parse_rollout_mode(const std::string& name) {
    if (name == "basic") return RolloutMode::basic;
    if (name == "reinit") return RolloutMode::reinit;
    throw InvalidArgument("unknown rollout mode '" + name + "' (expected basic|reinit)");
}

std::string to_string(RolloutMode mode) { return mode == RolloutMode::basic ? "basic" : "reinit"; }

void RolloutConfig::validate() const {
    if (!(duration >= 0.0)) {
        throw InvalidArgument("rollout duration must be >= 0");
    }
    if (mode == RolloutMode::reinit) {
        if (!(reinit_period > 0.0)) {
            throw InvalidArgument("reinit_period must be > 0");
        }
        if (!(reinit_horizon >= reinit_period)) {
            throw InvalidArgument("reinit_horizon must be >= reinit_period");
        }
    }
}

RolloutTrajectory rollout(const InteractionModel& model, const SwarmTrajectory& window, double duration) {
    model.validate();
    if (window.size() < 2) {
        throw InvalidArgument("rollout needs at least 2 seed snapshots for the velocity estimate");
    }
    if (window.agent_count() != model.n_agents()) {
        throw InvalidArgument("seed window has " + std::to_string(window.agent_count()) + " agents, model expects " +
                              std::to_string(model.n_agents()));
    }
    if (std::abs(window.dt - model.dt) > 1e-9 * model.dt) {
        throw InvalidArgument("seed window dt differs from the model dt");
    }

    const double dt = model.dt;
    const std::size_t total = steps_for(duration, dt) + 1;

    RolloutTrajectory out;
    out.start_time = window.start_time();
    out.trajectory.dt = window.dt;
    const std::size_t seeded = std::min(total, window.size());
    out.trajectory.snapshots.assign(window.snapshots.begin(),
                                    window.snapshots.begin() + static_cast<std::ptrdiff_t>(seeded));
    if (seeded == total) {
        return out;
    }

    const auto& layout = model.layout;
    Eigen::Matrix2Xd prev = positions_of(window.snapshots[seeded - 2]);
    Eigen::Matrix2Xd curr = positions_of(window.snapshots[seeded - 1]);
    Eigen::VectorXd y(static_cast<Eigen::Index>(layout.rows()));

    for (std::size_t k = seeded; k < total; ++k) {
        const Eigen::Matrix2Xd velocity = (curr - prev) / dt;
        const KinematicState state{curr, velocity, headings_from_velocities(velocity)};
        fill_features(layout, state, y);
        const Eigen::VectorXd next =
            stack_positions(curr) + drift_term(model.dynamics, velocity, dt) + model.K * y;
        const double time = out.start_time + static_cast<double>(k) * dt;
        if (!next.allFinite()) {
            out.divergence = Divergence{time, k};
            break;
        }
        Eigen::Matrix2Xd next_pos = unstack_positions(next);
        out.trajectory.snapshots.push_back(make_snapshot(time, next_pos, (next_pos - curr) / dt));
        prev = std::move(curr);
        curr = std::move(next_pos);
    }
    return out;
}

RolloutTrajectory rollout_standard(const InteractionModel& model, const SwarmTrajectory& window, double duration) {
    require_dynamics(model, Dynamics::standard);
    return rollout(model, window, duration);
}

RolloutTrajectory rollout_fo_cartesian(const InteractionModel& model, const SwarmTrajectory& window,
                                       double duration) {
    require_dynamics(model, Dynamics::fo_cartesian);
    return rollout(model, window, duration);
}

RolloutTrajectory rollout_fo_polar(const InteractionModel& model, const SwarmTrajectory& window, double duration) {
    require_dynamics(model, Dynamics::fo_polar);
    return rollout(model, window, duration);
}

Eigen::MatrixXd rollout_with_inputs(const InteractionModel& model, const Eigen::VectorXd& x0,
                                    const Eigen::MatrixXd& inputs) {
    if (x0.size() != model.K.rows() || inputs.rows() != model.K.cols()) {
        throw InvalidArgument("initial state or inputs do not match K");
    }
    Eigen::MatrixXd states(x0.size(), inputs.cols() + 1);
    states.col(0) = x0;
    for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
        states.col(k + 1) = states.col(k) + model.K * inputs.col(k);
    }
    return states;
}

RolloutResult rollout_with_reinit(const InteractionModel& model, const SwarmTrajectory& ground_truth,
                                  const RolloutConfig& config) {
    config.validate();
    if (ground_truth.size() < 2) {
        throw InvalidArgument("ground truth needs at least 2 snapshots");
    }
    const double span = ground_truth.end_time() - ground_truth.start_time();
    if (span + 1e-9 * ground_truth.dt < config.reinit_period) {
        throw InvalidArgument("ground truth is shorter than one restart period");
    }
    const std::size_t stride = steps_for(config.reinit_period, ground_truth.dt);
    if (stride == 0) {
        throw InvalidArgument("reinit_period must be at least one time step");
    }

    RolloutResult result;
    result.dynamics = model.dynamics;
    for (std::size_t k0 = 0; k0 + 1 < ground_truth.size(); k0 += stride) {
        result.rollouts.push_back(rollout(model, ground_truth.slice(k0, 2), config.reinit_horizon));
    }
    return result;
}

RolloutResult rollout_basic(const InteractionModel& model, const SwarmTrajectory& ground_truth,
                            const RolloutConfig& config) {
    config.validate();
    if (ground_truth.size() < 2) {
        throw InvalidArgument("ground truth needs at least 2 snapshots");
    }
    RolloutResult result;
    result.dynamics = model.dynamics;
    result.rollouts.push_back(rollout(model, ground_truth.slice(0, 2), config.duration));
    return result;
}

void save_rollout_result(const RolloutResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "index.csv");
    if (!index) {
        throw IoError("cannot write " + (dir / "index.csv").string());
    }
    index << "start_ms,start_time,snapshots,diverged_at\n";
    for (const auto& r : result.rollouts) {
        const auto ms = static_cast<long long>(std::llround(r.start_time * 1000.0));
        const std::string name = "rollout_" + std::to_string(ms) + ".csv";
        save_trajectory(r.trajectory, dir / name);
        index << ms << ',' << format_double(r.start_time) << ',' << r.trajectory.size() << ','
              << (r.divergence ? format_double(r.divergence->time) : std::string()) << '\n';
    }
}

} // namespace swarmdmd

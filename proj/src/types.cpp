#include "swarmdmd/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "swarmdmd/error.hpp"
#include "swarmdmd/rng.hpp"

namespace swarmdmd {

namespace {

constexpr double kTimeTolerance = 1e-9;

bool same_time(double a, double b, double scale) { return std::abs(a - b) <= kTimeTolerance * scale; }

} // namespace

double wrap_angle(double theta) {
    double wrapped = std::remainder(theta, kTwoPi);
    if (wrapped <= -kPi) {
        wrapped += kTwoPi;
    }
    return wrapped;
}

SwarmTrajectory SwarmTrajectory::slice(std::size_t first, std::size_t count) const {
    if (first + count > snapshots.size()) {
        throw InvalidArgument("trajectory slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                              ") exceeds " + std::to_string(snapshots.size()) + " snapshots");
    }
    SwarmTrajectory out;
    out.dt = dt;
    out.snapshots.assign(snapshots.begin() + static_cast<std::ptrdiff_t>(first),
                         snapshots.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
}

std::optional<std::size_t> SwarmTrajectory::index_of(double time) const {
    if (snapshots.empty() || dt <= 0.0) {
        return std::nullopt;
    }
    const double steps = (time - start_time()) / dt;
    const double rounded = std::round(steps);
    if (rounded < 0.0 || std::abs(steps - rounded) > 1e-6) {
        return std::nullopt;
    }
    const auto idx = static_cast<std::size_t>(rounded);
    if (idx >= snapshots.size()) {
        return std::nullopt;
    }
    return idx;
}

void SwarmParams::validate() const {
    auto fail = [](const std::string& what) { throw InvalidArgument("invalid swarm parameters: " + what); };
    if (n_agents == 0) fail("n_agents must be positive");
    if (!(dt > 0.0)) fail("dt must be > 0");
    if (!(density > 0.0)) fail("density must be > 0");
    if (!(speed >= 0.0)) fail("speed must be >= 0");
    if (!(interaction_radius >= 0.0)) fail("interaction_radius must be >= 0");
    if (!(noise >= 0.0)) fail("noise must be >= 0");
    if (field_of_view && !(*field_of_view >= 0.0 && *field_of_view <= kTwoPi)) {
        fail("field_of_view must lie in [0, 2*pi]");
    }
    if (max_turn_rate && !(*max_turn_rate >= 0.0 && *max_turn_rate <= kPi / dt * (1.0 + 1e-12))) {
        fail("max_turn_rate must lie in [0, pi/dt]");
    }
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        if (v.snapshot) {
            os << "snapshot " << *v.snapshot << ": ";
        }
        os << v.message << '\n';
    }
    return os.str();
}

ValidationReport validate_trajectory(const SwarmTrajectory& traj) {
    ValidationReport report;
    auto add = [&](std::optional<std::size_t> snap, std::string msg) {
        report.violations.push_back({snap, std::move(msg)});
    };

    if (!(traj.dt > 0.0)) {
        add(std::nullopt, "dt must be > 0");
    }
    if (traj.snapshots.empty()) {
        add(std::nullopt, "trajectory has no snapshots");
        return report;
    }

    const std::size_t n = traj.snapshots.front().agent_count();
    const double t0 = traj.snapshots.front().time;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& snap = traj.snapshots[k];
        if (snap.agent_count() != n) {
            add(k, "agent count " + std::to_string(snap.agent_count()) + " differs from " + std::to_string(n));
        }
        if (traj.dt > 0.0) {
            const double expected = t0 + static_cast<double>(k) * traj.dt;
            const double scale = std::max({std::abs(expected), std::abs(traj.dt), 1.0});
            if (!std::isfinite(snap.time) || !same_time(snap.time, expected, scale)) {
                std::ostringstream os;
                os.precision(17);
                os << "time " << snap.time << " violates uniform dt " << traj.dt << " (expected " << expected << ")";
                add(k, os.str());
            }
        }
        for (std::size_t i = 0; i < snap.agents.size(); ++i) {
            const auto& a = snap.agents[i];
            if (!a.position.allFinite()) {
                add(k, "agent " + std::to_string(i) + " has a non-finite position");
            }
            if (!(a.heading > -kPi && a.heading <= kPi)) {
                add(k, "agent " + std::to_string(i) + " heading outside (-pi, pi]");
            }
        }
    }
    return report;
}

SwarmTrajectory interpolate_trajectory(const SwarmTrajectory& traj, double target_dt) {
    if (!(target_dt > 0.0)) {
        throw InvalidArgument("interpolation target dt must be > 0");
    }
    if (auto report = validate_trajectory(traj); !report.ok()) {
        throw InvalidArgument("cannot interpolate an invalid trajectory:\n" + report.to_string());
    }
    const double ratio = traj.dt / target_dt;
    const double factor_d = std::round(ratio);
    if (factor_d < 1.0 || std::abs(ratio - factor_d) > 1e-9 * ratio) {
        std::ostringstream os;
        os << "target dt " << target_dt << " does not divide trajectory dt " << traj.dt
           << " into an integer number of steps (ratio " << ratio << ")";
        throw InvalidArgument(os.str());
    }
    const auto factor = static_cast<std::size_t>(factor_d);

    SwarmTrajectory out;
    out.dt = traj.dt / factor_d;
    out.snapshots.reserve((traj.size() - 1) * factor + 1);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const auto& a = traj.snapshots[k];
        const auto& b = traj.snapshots[k + 1];
        for (std::size_t j = 0; j < factor; ++j) {
            if (j == 0) {
                out.snapshots.push_back(a);
                continue;
            }
            const double s = static_cast<double>(j) / factor_d;
            SwarmSnapshot snap;
            snap.time = a.time + (b.time - a.time) * s;
            snap.agents.resize(a.agents.size());
            for (std::size_t i = 0; i < a.agents.size(); ++i) {
                const auto& pa = a.agents[i];
                const auto& pb = b.agents[i];
                snap.agents[i].position = pa.position + (pb.position - pa.position) * s;
                snap.agents[i].heading = wrap_angle(pa.heading + wrap_angle(pb.heading - pa.heading) * s);
            }
            out.snapshots.push_back(std::move(snap));
        }
    }
    out.snapshots.push_back(traj.snapshots.back());
    return out;
}

std::vector<std::size_t> sample_agent_indices(std::size_t n, std::size_t target_n, std::uint64_t seed) {
    if (target_n > n) {
        throw InvalidArgument("cannot subsample " + std::to_string(target_n) + " agents from " + std::to_string(n));
    }
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    // Partial Fisher-Yates: the first target_n entries become the sample.
    Rng rng(seed);
    for (std::size_t i = 0; i < target_n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(target_n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

SwarmTrajectory subsample_agents(const SwarmTrajectory& traj, std::size_t target_n, std::uint64_t seed) {
    const auto keep = sample_agent_indices(traj.agent_count(), target_n, seed);
    SwarmTrajectory out;
    out.dt = traj.dt;
    out.snapshots.reserve(traj.size());
    for (const auto& snap : traj.snapshots) {
        SwarmSnapshot s;
        s.time = snap.time;
        s.agents.reserve(keep.size());
        for (auto idx : keep) {
            s.agents.push_back(snap.agents.at(idx));
        }
        out.snapshots.push_back(std::move(s));
    }
    return out;
}

Eigen::Matrix2Xd positions_of(const SwarmSnapshot& snapshot) {
    Eigen::Matrix2Xd p(2, static_cast<Eigen::Index>(snapshot.agents.size()));
    for (std::size_t i = 0; i < snapshot.agents.size(); ++i) {
        p.col(static_cast<Eigen::Index>(i)) = snapshot.agents[i].position;
    }
    return p;
}

Eigen::VectorXd headings_of(const SwarmSnapshot& snapshot) {
    Eigen::VectorXd h(static_cast<Eigen::Index>(snapshot.agents.size()));
    for (std::size_t i = 0; i < snapshot.agents.size(); ++i) {
        h(static_cast<Eigen::Index>(i)) = snapshot.agents[i].heading;
    }
    return h;
}

} // namespace swarmdmd

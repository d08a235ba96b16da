#include "swarmdmd/vicsek.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "swarmdmd/error.hpp"

namespace swarmdmd {

namespace {

// Uniform bucket grid with cell size = interaction radius. Queries return
// candidate indices in ascending order so that the floating-point summation
// order matches the brute-force path exactly.
class NeighborGrid {
  public:
    NeighborGrid(const SwarmSnapshot& snapshot, double cell) : cell_(cell) {
        const auto n = snapshot.agents.size();
        entries_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            entries_.emplace_back(key_of(snapshot.agents[i].position), i);
        }
        std::sort(entries_.begin(), entries_.end());
    }

    void candidates(const Eigen::Vector2d& p, std::vector<std::size_t>& out) const {
        out.clear();
        const auto [cx, cy] = cell_of(p);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const Key key{cx + dx, cy + dy};
                auto lo = std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(key, std::size_t{0}));
                for (; lo != entries_.end() && lo->first == key; ++lo) {
                    out.push_back(lo->second);
                }
            }
        }
        std::sort(out.begin(), out.end());
    }

  private:
    using Key = std::pair<std::int64_t, std::int64_t>;

    Key cell_of(const Eigen::Vector2d& p) const {
        return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_))};
    }
    Key key_of(const Eigen::Vector2d& p) const { return cell_of(p); }

    double cell_;
    std::vector<std::pair<Key, std::size_t>> entries_;
};

bool in_view(const AgentState& focal, const AgentState& other, double fov) {
    if (fov >= kTwoPi) {
        return true;
    }
    const Eigen::Vector2d d = other.position - focal.position;
    const double bearing = std::atan2(d.y(), d.x());
    return std::abs(wrap_angle(bearing - focal.heading)) <= 0.5 * fov;
}

// Circular mean of the qualifying headings expressed as an offset from agent
// i's heading, in [-pi, pi]. Working relative to theta_i keeps a consensus
// state an exact fixed point (every term is sin 0 = 0, cos 0 = 1).
template <class Range>
double mean_offset(const SwarmSnapshot& snap, std::size_t i, double radius, double fov, const Range& candidates) {
    const auto& focal = snap.agents[i];
    const double r2 = radius * radius;
    double s = 0.0;
    double c = 0.0;
    for (std::size_t j : candidates) {
        const auto& other = snap.agents[j];
        if (j != i) {
            if ((other.position - focal.position).squaredNorm() > r2) continue;
            if (!in_view(focal, other, fov)) continue;
        }
        const double rel = other.heading - focal.heading;
        s += std::sin(rel);
        c += std::cos(rel);
    }
    return std::atan2(s, c);
}

struct IndexRange {
    std::size_t n;
    struct It {
        std::size_t v;
        std::size_t operator*() const { return v; }
        It& operator++() { ++v; return *this; }
        bool operator!=(const It& o) const { return v != o.v; }
    };
    It begin() const { return {0}; }
    It end() const { return {n}; }
};

// Offsets for all agents, using the bucket grid for larger swarms.
std::vector<double> mean_offsets(const SwarmSnapshot& snap, double radius, double fov) {
    const std::size_t n = snap.agents.size();
    std::vector<double> offsets(n);
    if (n < 64 || !(radius > 0.0)) {
        for (std::size_t i = 0; i < n; ++i) offsets[i] = mean_offset(snap, i, radius, fov, IndexRange{n});
        return offsets;
    }
    const NeighborGrid grid(snap, radius);
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i) {
        grid.candidates(snap.agents[i].position, cand);
        offsets[i] = mean_offset(snap, i, radius, fov, cand);
    }
    return offsets;
}

void advance(AgentState& agent, double heading, double speed, double dt) {
    agent.heading = heading;
    agent.position += speed * dt * Eigen::Vector2d(std::cos(heading), std::sin(heading));
}

} // namespace

SimDomain SimDomain::from_params(const SwarmParams& params, std::optional<double> sim_width) {
    SimDomain d;
    d.init_width = std::sqrt(static_cast<double>(params.n_agents) / params.density);
    d.sim_width = sim_width.value_or(2.0 * d.init_width);
    return d;
}

void SimDomain::validate(const SwarmParams& params) const {
    const double expected = std::sqrt(static_cast<double>(params.n_agents) / params.density);
    if (std::abs(init_width - expected) > 1e-9 * expected) {
        throw InvalidArgument("init_width must equal sqrt(N / density)");
    }
    if (sim_width < init_width) {
        throw InvalidArgument("sim_width must be >= init_width");
    }
}

SwarmModel parse_swarm_model(const std::string& name) {
    if (name == "standard") return SwarmModel::standard;
    if (name == "milling") return SwarmModel::milling;
    throw InvalidArgument("unknown swarm model '" + name + "' (expected standard|milling)");
}

std::string to_string(SwarmModel model) { return model == SwarmModel::standard ? "standard" : "milling"; }

SwarmSnapshot init_swarm(const SwarmParams& params, const SimDomain& domain, Rng& rng) {
    const double half = 0.5 * domain.init_width;
    SwarmSnapshot snap;
    snap.agents.resize(params.n_agents);
    for (auto& a : snap.agents) {
        const double x = rng.uniform(-half, half);
        const double y = rng.uniform(-half, half);
        // 1 - u lies in (0, 1], so the heading lands in (-pi, pi].
        const double heading = kPi - kTwoPi * rng.uniform01();
        a.position = {x, y};
        a.heading = heading;
    }
    return snap;
}

SwarmSnapshot init_swarm(const SwarmParams& params, const SimDomain& domain) {
    Rng rng(params.seed);
    return init_swarm(params, domain, rng);
}

double mean_neighbor_heading(const SwarmSnapshot& snapshot, std::size_t i, double radius, double fov) {
    if (i >= snapshot.agents.size()) {
        throw InvalidArgument("agent index out of range");
    }
    if (!(radius >= 0.0)) {
        throw InvalidArgument("interaction radius must be >= 0");
    }
    const double offset = mean_offset(snapshot, i, radius, fov, IndexRange{snapshot.agents.size()});
    return wrap_angle(snapshot.agents[i].heading + offset);
}

SwarmSnapshot step_standard(const SwarmSnapshot& snapshot, const SwarmParams& params, Rng& rng) {
    const auto offsets = mean_offsets(snapshot, params.interaction_radius, kTwoPi);
    SwarmSnapshot next = snapshot;
    next.time = snapshot.time + params.dt;
    for (std::size_t i = 0; i < next.agents.size(); ++i) {
        const double noise = (rng.uniform01() - 0.5) * params.noise;
        const double heading = wrap_angle(snapshot.agents[i].heading + offsets[i] + noise);
        advance(next.agents[i], heading, params.speed, params.dt);
    }
    return next;
}

SwarmSnapshot step_milling(const SwarmSnapshot& snapshot, const SwarmParams& params, Rng& rng) {
    const double fov = params.field_of_view.value_or(kTwoPi);
    const double max_turn = params.max_turn_rate ? *params.max_turn_rate * params.dt : kPi;
    if (!(fov >= 0.0 && fov <= kTwoPi)) {
        throw InvalidArgument("field_of_view must lie in [0, 2*pi]");
    }
    if (!(max_turn >= 0.0 && max_turn <= kPi * (1.0 + 1e-12))) {
        throw InvalidArgument("max_turn_rate must lie in [0, pi/dt]");
    }

    const auto offsets = mean_offsets(snapshot, params.interaction_radius, fov);
    SwarmSnapshot next = snapshot;
    next.time = snapshot.time + params.dt;
    for (std::size_t i = 0; i < next.agents.size(); ++i) {
        const double previous = snapshot.agents[i].heading;
        const double delta = offsets[i];
        double turn;
        if (std::abs(delta) < max_turn) {
            turn = delta;
        } else if (delta >= max_turn) {
            turn = max_turn;
        } else {
            turn = -max_turn;
        }
        const double noise = (rng.uniform01() - 0.5) * params.noise;
        advance(next.agents[i], wrap_angle(previous + turn + noise), params.speed, params.dt);
    }
    return next;
}

SwarmTrajectory simulate(const SwarmParams& params, const SimDomain& domain, SwarmModel model, double duration) {
    params.validate();
    if (!(duration >= 0.0)) {
        throw InvalidArgument("duration must be >= 0");
    }
    const double steps_d = duration / params.dt;
    const double rounded = std::round(steps_d);
    if (std::abs(steps_d - rounded) > 1e-9 * std::max(1.0, steps_d)) {
        throw InvalidArgument("duration must be an integer multiple of dt");
    }
    const auto steps = static_cast<std::size_t>(rounded);

    Rng rng(params.seed);
    SwarmTrajectory traj;
    traj.dt = params.dt;
    traj.snapshots.reserve(steps + 1);
    traj.snapshots.push_back(init_swarm(params, domain, rng));
    for (std::size_t k = 0; k < steps; ++k) {
        const auto& prev = traj.snapshots.back();
        SwarmSnapshot next =
            model == SwarmModel::standard ? step_standard(prev, params, rng) : step_milling(prev, params, rng);
        // Times are k * dt rather than accumulated sums.
        next.time = static_cast<double>(k + 1) * params.dt;
        traj.snapshots.push_back(std::move(next));
    }
    return traj;
}

} // namespace swarmdmd

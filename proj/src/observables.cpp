#include "swarmdmd/observables.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "swarmdmd/error.hpp"

namespace swarmdmd {

namespace {

constexpr std::array<std::pair<FeatureKind, const char*>, 10> kKindNames{{
    {FeatureKind::position, "position"},
    {FeatureKind::velocity, "velocity"},
    {FeatureKind::heading, "heading"},
    {FeatureKind::rel_position, "rel_position"},
    {FeatureKind::rel_distance, "rel_distance"},
    {FeatureKind::rel_heading, "rel_heading"},
    {FeatureKind::rel_velocity, "rel_velocity"},
    {FeatureKind::rel_speed, "rel_speed"},
    {FeatureKind::rel_position_signed, "rel_position_signed"},
    {FeatureKind::rel_velocity_signed, "rel_velocity_signed"},
}};

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

// Value of a pairwise feature for (i, j) and component c of a kind.
template <class Sink>
void for_each_pair_value(const KinematicState& s, FeatureKind kind, Sink&& sink) {
    const auto n = static_cast<std::size_t>(s.positions.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                // Self pairs stay structural zeros; the sink sees nothing.
                continue;
            }
            const Index ii = idx(i), jj = idx(j);
            switch (kind) {
            case FeatureKind::rel_position:
            case FeatureKind::rel_position_signed:
            case FeatureKind::rel_velocity:
            case FeatureKind::rel_velocity_signed: {
                const bool pos = kind == FeatureKind::rel_position || kind == FeatureKind::rel_position_signed;
                const bool signed_ = kind == FeatureKind::rel_position_signed || kind == FeatureKind::rel_velocity_signed;
                const Eigen::Vector2d d = pos ? Eigen::Vector2d(s.positions.col(ii) - s.positions.col(jj))
                                              : Eigen::Vector2d(s.velocities.col(ii) - s.velocities.col(jj));
                sink(i, j, 0, signed_ ? d.x() : std::abs(d.x()));
                sink(i, j, 1, signed_ ? d.y() : std::abs(d.y()));
                break;
            }
            case FeatureKind::rel_distance:
                sink(i, j, 0, (s.positions.col(ii) - s.positions.col(jj)).norm());
                break;
            case FeatureKind::rel_heading:
                sink(i, j, 0, std::abs(wrap_angle(s.headings(ii) - s.headings(jj))));
                break;
            case FeatureKind::rel_speed:
                sink(i, j, 0, std::abs(s.velocities.col(ii).norm() - s.velocities.col(jj).norm()));
                break;
            default:
                throw InvalidArgument("not a pairwise feature kind: " + to_string(kind));
            }
        }
    }
}

void check_state(const KinematicState& s) {
    const auto n = s.positions.cols();
    if (s.velocities.cols() != n || s.headings.size() != n) {
        throw InvalidArgument("kinematic state components disagree on agent count");
    }
}

} // namespace

std::string to_string(FeatureKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

FeatureKind parse_feature_kind(const std::string& name) {
    for (const auto& [k, n] : kKindNames) {
        if (name == n) return k;
    }
    throw InvalidArgument("unknown feature kind '" + name + "'");
}

bool is_pairwise(FeatureKind kind) {
    return kind != FeatureKind::position && kind != FeatureKind::velocity && kind != FeatureKind::heading;
}

std::size_t per_agent_width(FeatureKind kind, std::size_t n) {
    switch (kind) {
    case FeatureKind::position:
    case FeatureKind::velocity:
        return 2;
    case FeatureKind::heading:
        return 1;
    case FeatureKind::rel_position:
    case FeatureKind::rel_velocity:
    case FeatureKind::rel_position_signed:
    case FeatureKind::rel_velocity_signed:
        return 2 * n;
    case FeatureKind::rel_distance:
    case FeatureKind::rel_heading:
    case FeatureKind::rel_speed:
        return n;
    }
    return 0;
}

FeatureLayout::FeatureLayout(std::vector<FeatureKind> kinds, std::size_t n_agents)
    : kinds_(std::move(kinds)), n_agents_(n_agents) {
    if (kinds_.empty()) {
        throw InvalidArgument("feature layout needs at least one kind");
    }
    if (n_agents_ == 0) {
        throw InvalidArgument("feature layout needs at least one agent");
    }
    for (std::size_t a = 0; a < kinds_.size(); ++a) {
        for (std::size_t b = a + 1; b < kinds_.size(); ++b) {
            if (kinds_[a] == kinds_[b]) {
                throw InvalidArgument("feature kind '" + to_string(kinds_[a]) + "' listed twice");
            }
        }
    }
    for (auto k : kinds_) {
        const std::size_t width = n_agents_ * per_agent_width(k, n_agents_);
        blocks_.push_back({k, rows_, width});
        rows_ += width;
    }
}

FeatureLayout FeatureLayout::parse(const std::string& spec, std::size_t n_agents) {
    std::string normalized = spec;
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::istringstream is(normalized);
    std::vector<FeatureKind> kinds;
    for (std::string tok; is >> tok;) {
        kinds.push_back(parse_feature_kind(tok));
    }
    return FeatureLayout(std::move(kinds), n_agents);
}

const FeatureLayout::Block& FeatureLayout::block(FeatureKind kind) const {
    for (const auto& b : blocks_) {
        if (b.kind == kind) return b;
    }
    throw InvalidArgument("layout has no '" + to_string(kind) + "' block");
}

bool FeatureLayout::contains(FeatureKind kind) const {
    return std::find(kinds_.begin(), kinds_.end(), kind) != kinds_.end();
}

std::size_t FeatureLayout::row(FeatureKind kind, std::size_t component, std::size_t agent) const {
    const auto& b = block(kind);
    if (agent >= n_agents_ || component >= per_agent_width(kind, n_agents_)) {
        throw InvalidArgument("feature row index out of range");
    }
    return b.start + component * n_agents_ + agent;
}

std::string FeatureLayout::spec() const {
    std::string out;
    for (auto k : kinds_) {
        if (!out.empty()) out += ',';
        out += to_string(k);
    }
    return out;
}

std::vector<Eigen::Matrix2Xd> velocity_from_positions(const SwarmTrajectory& traj) {
    if (traj.size() < 2) {
        throw InvalidArgument("velocity estimation needs at least 2 snapshots");
    }
    std::vector<Eigen::Matrix2Xd> v;
    v.reserve(traj.size());
    Eigen::Matrix2Xd prev = positions_of(traj.snapshots[0]);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        Eigen::Matrix2Xd next = positions_of(traj.snapshots[k + 1]);
        v.push_back((next - prev) / traj.dt);
        prev = std::move(next);
    }
    v.push_back(v.back());
    return v;
}

std::vector<Eigen::Matrix2Xd> backward_velocities(const SwarmTrajectory& traj) {
    auto forward = velocity_from_positions(traj);
    std::vector<Eigen::Matrix2Xd> v;
    v.reserve(traj.size());
    v.push_back(forward[0]);
    for (std::size_t k = 1; k < traj.size(); ++k) {
        v.push_back(forward[k - 1]);
    }
    return v;
}

double heading_from_velocity(const Eigen::Vector2d& v) {
    if (v.x() == 0.0 && v.y() == 0.0) {
        return 0.0;
    }
    return std::atan2(v.y(), v.x());
}

Eigen::VectorXd headings_from_velocities(const Eigen::Matrix2Xd& velocities) {
    Eigen::VectorXd h(velocities.cols());
    for (Index i = 0; i < velocities.cols(); ++i) {
        h(i) = heading_from_velocity(velocities.col(i));
    }
    return h;
}

Eigen::MatrixXd pairwise_features(const KinematicState& state, FeatureKind kind) {
    check_state(state);
    if (!is_pairwise(kind)) {
        throw InvalidArgument("not a pairwise feature kind: " + to_string(kind));
    }
    const auto n = static_cast<std::size_t>(state.positions.cols());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(idx(per_agent_width(kind, n)), idx(n));
    for_each_pair_value(state, kind, [&](std::size_t i, std::size_t j, std::size_t axis, double value) {
        out(idx(axis * n + j), idx(i)) = value;
    });
    return out;
}

void fill_features(const FeatureLayout& layout, const KinematicState& state, Eigen::Ref<Eigen::VectorXd> out) {
    check_state(state);
    const std::size_t n = layout.n_agents();
    if (static_cast<std::size_t>(state.positions.cols()) != n) {
        throw InvalidArgument("state has " + std::to_string(state.positions.cols()) + " agents, layout expects " +
                              std::to_string(n));
    }
    if (static_cast<std::size_t>(out.size()) != layout.rows()) {
        throw InvalidArgument("feature buffer has the wrong length");
    }
    for (const auto& b : layout.blocks()) {
        auto block = out.segment(idx(b.start), idx(b.width));
        switch (b.kind) {
        case FeatureKind::position:
            block.head(idx(n)) = state.positions.row(0).transpose();
            block.tail(idx(n)) = state.positions.row(1).transpose();
            break;
        case FeatureKind::velocity:
            block.head(idx(n)) = state.velocities.row(0).transpose();
            block.tail(idx(n)) = state.velocities.row(1).transpose();
            break;
        case FeatureKind::heading:
            block = state.headings;
            break;
        default:
            block.setZero();
            for_each_pair_value(state, b.kind, [&](std::size_t i, std::size_t j, std::size_t axis, double value) {
                block(idx((axis * n + j) * n + i)) = value;
            });
            break;
        }
    }
}

Eigen::VectorXd stack_positions(const Eigen::Matrix2Xd& positions) {
    const Index n = positions.cols();
    Eigen::VectorXd x(2 * n);
    x.head(n) = positions.row(0).transpose();
    x.tail(n) = positions.row(1).transpose();
    return x;
}

Eigen::Matrix2Xd unstack_positions(const Eigen::Ref<const Eigen::VectorXd>& state) {
    if (state.size() % 2 != 0) {
        throw InvalidArgument("stacked position vector must have even length");
    }
    const Index n = state.size() / 2;
    Eigen::Matrix2Xd p(2, n);
    p.row(0) = state.head(n).transpose();
    p.row(1) = state.tail(n).transpose();
    return p;
}

std::string to_string(Dynamics dynamics) {
    switch (dynamics) {
    case Dynamics::standard:
        return "standard";
    case Dynamics::fo_cartesian:
        return "fo_cartesian";
    case Dynamics::fo_polar:
        return "fo_polar";
    }
    return "unknown";
}

Dynamics parse_dynamics(const std::string& name) {
    if (name == "standard") return Dynamics::standard;
    if (name == "fo_cartesian") return Dynamics::fo_cartesian;
    if (name == "fo_polar") return Dynamics::fo_polar;
    throw InvalidArgument("unknown dynamics '" + name + "' (expected standard|fo_cartesian|fo_polar)");
}

Eigen::VectorXd drift_term(Dynamics dynamics, const Eigen::Matrix2Xd& velocities, double dt) {
    switch (dynamics) {
    case Dynamics::standard:
        return Eigen::VectorXd::Zero(2 * velocities.cols());
    case Dynamics::fo_cartesian:
        return stack_positions(velocities * dt);
    case Dynamics::fo_polar: {
        Eigen::Matrix2Xd d(2, velocities.cols());
        for (Index i = 0; i < velocities.cols(); ++i) {
            const double speed = velocities.col(i).norm();
            const double theta = heading_from_velocity(velocities.col(i));
            d(0, i) = speed * std::cos(theta) * dt;
            d(1, i) = speed * std::sin(theta) * dt;
        }
        return stack_positions(d);
    }
    }
    return {};
}

SnapshotMatrices assemble_matrices(const SwarmTrajectory& traj, const FeatureLayout& layout, Dynamics dynamics) {
    if (traj.size() < 3) {
        throw InvalidArgument("snapshot matrices need at least 3 snapshots");
    }
    if (layout.n_agents() != traj.agent_count()) {
        throw InvalidArgument("layout is for " + std::to_string(layout.n_agents()) + " agents, trajectory has " +
                              std::to_string(traj.agent_count()));
    }
    const Index n = idx(traj.agent_count());
    const Index cols = idx(traj.size() - 1);

    const auto forward = velocity_from_positions(traj);
    const auto backward = backward_velocities(traj);

    SnapshotMatrices m;
    m.layout = layout;
    m.dynamics = dynamics;
    m.dt = traj.dt;
    m.X.resize(2 * n, cols);
    m.Xprime.resize(2 * n, cols);
    m.Y.resize(idx(layout.rows()), cols);
    m.drift.resize(2 * n, cols);

    Eigen::Matrix2Xd pos = positions_of(traj.snapshots[0]);
    for (Index k = 0; k < cols; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        Eigen::Matrix2Xd next = positions_of(traj.snapshots[uk + 1]);
        m.X.col(k) = stack_positions(pos);
        m.Xprime.col(k) = stack_positions(next);
        KinematicState state{pos, forward[uk], headings_from_velocities(forward[uk])};
        fill_features(layout, state, m.Y.col(k));
        m.drift.col(k) = drift_term(dynamics, backward[uk], traj.dt);
        pos = std::move(next);
    }
    m.S = m.Xprime - m.X;
    return m;
}

} // namespace swarmdmd

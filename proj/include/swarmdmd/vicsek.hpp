#pragma once

#include <cstddef>

#include "swarmdmd/rng.hpp"
#include "swarmdmd/types.hpp"

namespace swarmdmd {

/// Agents start uniformly in a centred init_width square; sim_width is only a
/// reporting frame. Boundaries are open.
struct SimDomain {
    double init_width = 1.0;
    double sim_width = 2.0;

    /// init_width = sqrt(N / density), sim_width = 2 * init_width unless given.
    static SimDomain from_params(const SwarmParams& params, std::optional<double> sim_width = std::nullopt);

    void validate(const SwarmParams& params) const;
};

enum class SwarmModel { standard, milling };

SwarmModel parse_swarm_model(const std::string& name);
std::string to_string(SwarmModel model);

/// Draws x, y, heading for each agent in index order.
SwarmSnapshot init_swarm(const SwarmParams& params, const SimDomain& domain, Rng& rng);
SwarmSnapshot init_swarm(const SwarmParams& params, const SimDomain& domain);

/// Circular mean heading of agent i's neighbours (itself included) within
/// `radius`, restricted to a field of view of width `fov` centred on agent i's
/// heading when fov < 2*pi. Returns agent i's own heading if nobody else
/// qualifies.
double mean_neighbor_heading(const SwarmSnapshot& snapshot, std::size_t i, double radius, double fov = kTwoPi);

/// One step of the standard Vicsek update; consumes one noise draw per agent.
SwarmSnapshot step_standard(const SwarmSnapshot& snapshot, const SwarmParams& params, Rng& rng);

/// One step of the milling variant: restricted field of view and turn rate
/// saturated at max_turn_rate * dt. Noise is added after saturation.
SwarmSnapshot step_milling(const SwarmSnapshot& snapshot, const SwarmParams& params, Rng& rng);

/// Initial snapshot plus round(duration / dt) steps, seeded from params.seed.
SwarmTrajectory simulate(const SwarmParams& params, const SimDomain& domain, SwarmModel model, double duration);

} // namespace swarmdmd

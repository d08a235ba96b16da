#pragma once

#include <filesystem>
#include <iosfwd>

#include "swarmdmd/types.hpp"

namespace swarmdmd {

// Trajectory interchange format: UTF-8 CSV, header `t,agent,x,y,theta`, rows
// sorted by (t, agent), every number written with 17 significant digits.

void write_trajectory_csv(std::ostream& os, const SwarmTrajectory& traj);
void save_trajectory(const SwarmTrajectory& traj, const std::filesystem::path& path);

/// Rows may arrive in any order; they are re-sorted by (t, agent). Every time
/// must carry the same agent set. Errors name the offending line or (t, agent).
SwarmTrajectory read_trajectory_csv(std::istream& is);
SwarmTrajectory load_trajectory(const std::filesystem::path& path);

/// Writes with max_digits10 precision.
std::string format_double(double value);

} // namespace swarmdmd

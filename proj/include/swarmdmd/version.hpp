#pragma once

namespace swarmdmd {

inline constexpr const char* kVersion = "0.1.0";

} // namespace swarmdmd

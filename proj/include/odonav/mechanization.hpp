#pragma once

#include "odonav/types.hpp"

namespace odonav {

inline constexpr double kMinStepDt = 0.015;
inline constexpr double kMaxStepDt = 0.025;

// One strapdown update in the local NED frame. prev and curr are bias
// compensated samples; increments use their average (trapezoidal rule).
// Throws std::invalid_argument on non-monotonic or off-rate timestamps.
NavState mechanize_step(const NavState& state, const ImuSample& prev, const ImuSample& curr);

}  // namespace odonav

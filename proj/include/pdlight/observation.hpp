#pragma once

#include <array>
#include <cstddef>

namespace pdlight {

inline constexpr std::size_t kObservationWidth = 16;

// 12 incoming-lane vehicle counts followed by the one-hot current phase.
using Observation = std::array<double, kObservationWidth>;

}  // namespace pdlight

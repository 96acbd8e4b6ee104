#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "pdlight/netmodel.hpp"

namespace pdlight {

// Vehicle kinematics shared by the discharge law and the green-duration rule.
struct KinematicParams {
    double acceleration = 2.0;       // a, m/s^2
    double max_speed = 40.0 / 3.6;   // v, m/s
    double vehicle_length = 5.0;     // l_v, m
    double min_gap = 2.5;            // l_g, m

    double spacing() const { return vehicle_length + min_gap; }
};

// Throws std::invalid_argument unless every field is strictly positive.
void check(const KinematicParams& k);

// Vehicle counts of one movement: incoming lane, outgoing lane, and the outgoing lane capacity.
struct MovementCounts {
    std::int32_t n_in = 0;
    std::int32_t n_out = 0;
    std::int32_t n_max = 1;
};

enum class RewardKind { Prcol, Pressure, Queue };
enum class ScoreMetric { Prcol, Pressure };

const char* to_string(RewardKind kind);
RewardKind parse_reward_kind(const std::string& text);

// n_in * (1 - n_out / n_max). Throws std::domain_error if n_out > n_max, n_max < 1 or n_in < 0.
double prcol(const MovementCounts& c);

// n_in - n_out.
double pressure(const MovementCounts& c);

// Sum of the metric over the phase's movements. `counts` is indexed by movement slot.
double phase_score(std::span<const MovementCounts> counts, const Phase& phase, ScoreMetric metric);

// min(n_in, n_max - n_out), never negative.
std::int32_t n_pass(const MovementCounts& c);

// Time for n vehicles queued at the stop line with gap l_g to clear it, all starting
// from rest with acceleration a and capped at speed v.
double platoon_clear_time(std::int32_t n, const KinematicParams& k);

// Largest n with platoon_clear_time(n) <= elapsed.
std::int32_t platoon_passable(double elapsed, const KinematicParams& k);

// ceil(platoon_clear_time(max n_pass over the phase movements)), clamped to [t_min, t_max].
std::int32_t green_duration(std::span<const MovementCounts> phase_counts, const KinematicParams& k, std::int32_t t_min,
                            std::int32_t t_max);

// Per-intersection reward over all 12 movements.
//   prcol:    -sum prcol(c_i)
//   pressure: -|sum pressure(c_i)|
//   queue:    -sum n_in
double reward(std::span<const MovementCounts> counts, RewardKind kind);

}  // namespace pdlight

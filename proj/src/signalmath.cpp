#include "pdlight/signalmath.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pdlight {

void check(const KinematicParams& k) {
    if (!(k.acceleration > 0.0) || !(k.max_speed > 0.0) || !(k.vehicle_length > 0.0) || !(k.min_gap > 0.0)) {
        throw std::invalid_argument("kinematic parameters must be strictly positive");
    }
}

const char* to_string(RewardKind kind) {
    switch (kind) {
        case RewardKind::Prcol: return "prcol";
        case RewardKind::Pressure: return "pressure";
        case RewardKind::Queue: return "queue";
    }
    return "?";
}

RewardKind parse_reward_kind(const std::string& text) {
    if (text == "prcol") return RewardKind::Prcol;
    if (text == "pressure") return RewardKind::Pressure;
    if (text == "queue") return RewardKind::Queue;
    throw std::invalid_argument("unknown reward kind '" + text + "'");
}

double prcol(const MovementCounts& c) {
    if (c.n_max < 1 || c.n_out < 0 || c.n_out > c.n_max || c.n_in < 0) {
        throw std::domain_error("prcol: counts violate 0 <= n_out <= n_max, n_max >= 1, n_in >= 0");
    }
    return static_cast<double>(c.n_in) * (1.0 - static_cast<double>(c.n_out) / static_cast<double>(c.n_max));
}

double pressure(const MovementCounts& c) { return static_cast<double>(c.n_in) - static_cast<double>(c.n_out); }

double phase_score(std::span<const MovementCounts> counts, const Phase& phase, ScoreMetric metric) {
    double total = 0.0;
    for (std::size_t slot : phase.movements) {
        if (slot_turn(slot) == Turn::Right) continue;
        const auto& c = counts[slot];
        total += metric == ScoreMetric::Prcol ? prcol(c) : pressure(c);
    }
    return total;
}

std::int32_t n_pass(const MovementCounts& c) { return std::max(0, std::min(c.n_in, c.n_max - c.n_out)); }

double platoon_clear_time(std::int32_t n, const KinematicParams& k) {
    if (n <= 0) return 0.0;
    const double distance = static_cast<double>(n - 1) * k.spacing() + k.vehicle_length;
    const double ramp = k.max_speed * k.max_speed / (2.0 * k.acceleration);
    if (distance <= ramp) return std::sqrt(2.0 * distance / k.acceleration);
    return k.max_speed / k.acceleration + (distance - ramp) / k.max_speed;
}

std::int32_t platoon_passable(double elapsed, const KinematicParams& k) {
    if (elapsed <= 0.0) return 0;
    // Invert the closed form, then settle the boundary exactly against the forward map.
    const double ramp = k.max_speed * k.max_speed / (2.0 * k.acceleration);
    const double t_ramp = k.max_speed / k.acceleration;
    const double distance = elapsed <= t_ramp ? 0.5 * k.acceleration * elapsed * elapsed
                                              : ramp + (elapsed - t_ramp) * k.max_speed;
    auto n = static_cast<std::int32_t>(std::floor((distance - k.vehicle_length) / k.spacing())) + 1;
    n = std::max(n, 0);
    while (n > 0 && platoon_clear_time(n, k) > elapsed) --n;
    while (platoon_clear_time(n + 1, k) <= elapsed) ++n;
    return n;
}

std::int32_t green_duration(std::span<const MovementCounts> phase_counts, const KinematicParams& k, std::int32_t t_min,
                            std::int32_t t_max) {
    if (t_min > t_max) throw std::invalid_argument("green_duration: t_min > t_max");
    std::int32_t most = 0;
    for (const auto& c : phase_counts) most = std::max(most, n_pass(c));
    const auto t = static_cast<std::int32_t>(std::ceil(platoon_clear_time(most, k)));
    return std::clamp(t, t_min, t_max);
}

double reward(std::span<const MovementCounts> counts, RewardKind kind) {
    double total = 0.0;
    switch (kind) {
        case RewardKind::Prcol:
            for (const auto& c : counts) total += prcol(c);
            return 0.0 - total;
        case RewardKind::Pressure:
            for (const auto& c : counts) total += pressure(c);
            return 0.0 - std::abs(total);
        case RewardKind::Queue:
            for (const auto& c : counts) total += c.n_in;
            return 0.0 - total;
    }
    return 0.0;
}

}  // namespace pdlight

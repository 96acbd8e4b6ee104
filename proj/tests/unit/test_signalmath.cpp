#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "pdlight/signalmath.hpp"
#include "support.hpp"

using namespace pdlight;
using testing_support::random_counts;

namespace {

// Forward-Euler integration of one vehicle accelerating from rest, capped at v.
double integrated_clear_time(std::int32_t n, const KinematicParams& k) {
    if (n <= 0) return 0.0;
    const double target = static_cast<double>(n) * k.spacing() - k.min_gap;
    const double dt = 1e-3;
    double t = 0.0, x = 0.0, v = 0.0;
    while (x < target) {
        const double v_next = std::min(k.max_speed, v + k.acceleration * dt);
        x += 0.5 * (v + v_next) * dt;
        v = v_next;
        t += dt;
    }
    return t;
}

std::array<MovementCounts, 12> uniform_counts(MovementCounts c) {
    std::array<MovementCounts, 12> out;
    out.fill(c);
    return out;
}

}  // namespace

TEST(Prcol, WorkedExamples) {
    EXPECT_DOUBLE_EQ(prcol({10, 20, 40}), 5.0);
    EXPECT_DOUBLE_EQ(prcol({7, 40, 40}), 0.0);
    EXPECT_DOUBLE_EQ(prcol({12, 0, 40}), 12.0);
    EXPECT_DOUBLE_EQ(prcol({0, 13, 40}), 0.0);
}

TEST(Prcol, RejectsInvalidCounts) {
    EXPECT_THROW(prcol({5, 41, 40}), std::domain_error);
    EXPECT_THROW(prcol({5, 0, 0}), std::domain_error);
    EXPECT_THROW(prcol({-1, 0, 40}), std::domain_error);
}

TEST(Prcol, BoundedByIncomingCount) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 10000; ++i) {
        const auto c = random_counts(rng);
        const double p = prcol(c);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, c.n_in);
        if (c.n_out == c.n_max) EXPECT_DOUBLE_EQ(p, 0.0);
        if (c.n_out == 0) EXPECT_DOUBLE_EQ(p, c.n_in);
        if (c.n_out < c.n_max) {
            MovementCounts fuller = c;
            ++fuller.n_out;
            EXPECT_LE(prcol(fuller), p);
        }
    }
}

TEST(Pressure, Difference) {
    EXPECT_DOUBLE_EQ(pressure({10, 20, 40}), -10.0);
    EXPECT_DOUBLE_EQ(pressure({30, 5, 40}), 25.0);
}

TEST(NPass, MinOfQueueAndSpace) {
    EXPECT_EQ(n_pass({15, 35, 40}), 5);
    EXPECT_EQ(n_pass({3, 0, 40}), 3);
    EXPECT_EQ(n_pass({9, 40, 40}), 0);
    EXPECT_EQ(n_pass({0, 0, 40}), 0);
}

TEST(NPass, NeverNegativeAndBounded) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 10000; ++i) {
        const auto c = random_counts(rng);
        const auto n = n_pass(c);
        EXPECT_GE(n, 0);
        EXPECT_LE(n, c.n_in);
        EXPECT_LE(n, c.n_max - c.n_out);
    }
}

TEST(PlatoonClearTime, ReferenceValues) {
    const KinematicParams k;
    EXPECT_NEAR(platoon_clear_time(1, k), 2.236, 1e-3);
    EXPECT_NEAR(platoon_clear_time(10, k), 9.303, 1e-3);
    EXPECT_NEAR(platoon_clear_time(20, k), 16.053, 1e-3);
    EXPECT_DOUBLE_EQ(platoon_clear_time(0, k), 0.0);
}

TEST(PlatoonClearTime, AgreesWithNumericIntegration) {
    const KinematicParams k;
    for (std::int32_t n = 1; n <= 100; ++n) {
        EXPECT_NEAR(platoon_clear_time(n, k), integrated_clear_time(n, k), 0.05) << n;
    }
    KinematicParams slow;
    slow.acceleration = 1.0;
    slow.max_speed = 8.0;
    for (std::int32_t n = 1; n <= 40; ++n) {
        EXPECT_NEAR(platoon_clear_time(n, slow), integrated_clear_time(n, slow), 0.05) << n;
    }
}

TEST(PlatoonClearTime, StrictlyIncreasing) {
    const KinematicParams k;
    for (std::int32_t n = 0; n < 200; ++n) EXPECT_LT(platoon_clear_time(n, k), platoon_clear_time(n + 1, k));
}

TEST(PlatoonPassable, InvertsClearTime) {
    const KinematicParams k;
    EXPECT_EQ(platoon_passable(0.0, k), 0);
    EXPECT_EQ(platoon_passable(2.0, k), 0);
    EXPECT_EQ(platoon_passable(3.0, k), 1);
    for (std::int32_t n = 1; n <= 150; ++n) {
        const double t = platoon_clear_time(n, k);
        EXPECT_EQ(platoon_passable(t, k), n);
        EXPECT_EQ(platoon_passable(t - 1e-9, k), n - 1);
    }
    for (int s = 1; s <= 60; ++s) {
        const auto n = platoon_passable(s, k);
        EXPECT_LE(platoon_clear_time(n, k), s);
        EXPECT_GT(platoon_clear_time(n + 1, k), s);
    }
}

TEST(GreenDuration, ClampedCeilOfClearTime) {
    const KinematicParams k;
    const std::array<MovementCounts, 2> none{MovementCounts{0, 0, 40}, MovementCounts{0, 0, 40}};
    EXPECT_EQ(green_duration(none, k, 10, 20), 10);
    const std::array<MovementCounts, 2> twelve{MovementCounts{12, 0, 40}, MovementCounts{3, 0, 40}};
    EXPECT_EQ(green_duration(twelve, k, 10, 20), static_cast<int>(std::ceil(platoon_clear_time(12, k))));
    const std::array<MovementCounts, 2> many{MovementCounts{40, 0, 40}, MovementCounts{0, 0, 40}};
    EXPECT_EQ(green_duration(many, k, 10, 20), 20);
    // The outlet limits the platoon.
    const std::array<MovementCounts, 2> blocked{MovementCounts{40, 39, 40}, MovementCounts{0, 0, 40}};
    EXPECT_EQ(green_duration(blocked, k, 10, 20), 10);
    EXPECT_THROW(green_duration(none, k, 20, 10), std::invalid_argument);
}

TEST(GreenDuration, AlwaysWithinBounds) {
    std::mt19937_64 rng(13);
    const KinematicParams k;
    for (int i = 0; i < 10000; ++i) {
        const std::array<MovementCounts, 2> c{random_counts(rng), random_counts(rng)};
        const auto g = green_duration(c, k, 10, 20);
        EXPECT_GE(g, 10);
        EXPECT_LE(g, 20);
        const auto most = std::max(n_pass(c[0]), n_pass(c[1]));
        if (g < 20) EXPECT_LE(platoon_clear_time(most, k), g);
    }
}

TEST(Reward, WorkedExamples) {
    const auto c = uniform_counts({10, 20, 40});
    EXPECT_DOUBLE_EQ(reward(c, RewardKind::Prcol), -60.0);
    EXPECT_DOUBLE_EQ(reward(c, RewardKind::Pressure), -120.0);
    EXPECT_DOUBLE_EQ(reward(c, RewardKind::Queue), -120.0);

    const auto saturated = uniform_counts({25, 40, 40});
    EXPECT_DOUBLE_EQ(reward(saturated, RewardKind::Prcol), 0.0);
    EXPECT_DOUBLE_EQ(reward(saturated, RewardKind::Pressure), -std::abs(12.0 * (25 - 40)));
}

TEST(Reward, PressureUsesAbsoluteOfSignedSum) {
    std::array<MovementCounts, 12> c = uniform_counts({0, 0, 40});
    c[0] = {10, 0, 40};
    c[1] = {0, 10, 40};
    EXPECT_DOUBLE_EQ(reward(c, RewardKind::Pressure), 0.0);
    c[1] = {0, 15, 40};
    EXPECT_DOUBLE_EQ(reward(c, RewardKind::Pressure), -5.0);
}

TEST(Reward, NonPositiveProperty) {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 2000; ++i) {
        std::array<MovementCounts, 12> c;
        for (auto& x : c) x = random_counts(rng);
        for (auto kind : {RewardKind::Prcol, RewardKind::Pressure, RewardKind::Queue}) {
            EXPECT_LE(reward(c, kind), 0.0);
        }
        double prcol_sum = 0.0;
        for (const auto& x : c) prcol_sum += prcol(x);
        EXPECT_NEAR(reward(c, RewardKind::Prcol), -prcol_sum, 1e-9);
    }
}

TEST(PhaseScore, SumsPhaseMovements) {
    std::array<MovementCounts, 12> c = uniform_counts({0, 0, 40});
    c[1] = {10, 20, 40};
    c[4] = {8, 0, 40};
    c[2] = {50, 0, 40};  // right turn, not part of any phase
    const auto phases = standard_phase_table();
    EXPECT_DOUBLE_EQ(phase_score(c, phases[0], ScoreMetric::Prcol), 13.0);
    EXPECT_DOUBLE_EQ(phase_score(c, phases[0], ScoreMetric::Pressure), -2.0);
    EXPECT_DOUBLE_EQ(phase_score(c, phases[1], ScoreMetric::Prcol), 0.0);
}

TEST(RewardKind, ParseRoundTrip) {
    for (auto k : {RewardKind::Prcol, RewardKind::Pressure, RewardKind::Queue}) {
        EXPECT_EQ(parse_reward_kind(to_string(k)), k);
    }
    EXPECT_THROW(parse_reward_kind("delay"), std::invalid_argument);
}

TEST(Kinematics, CheckRejectsNonPositive) {
    KinematicParams k;
    EXPECT_NO_THROW(check(k));
    k.min_gap = 0;
    EXPECT_THROW(check(k), std::invalid_argument);
}

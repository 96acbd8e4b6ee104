#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "pdlight/learner.hpp"
#include "pdlight/netmodel.hpp"
#include "pdlight/observation.hpp"
#include "pdlight/signalmath.hpp"

namespace pdlight {

struct Decision {
    std::uint32_t phase = 0;
    std::int32_t green_duration = 0;
};

enum class ControllerKind { FixedTime, MaxPressure, GreedyPrcol, Dqn };
enum class DurationMode { Fixed, Dynamic };

const char* to_string(ControllerKind kind);
ControllerKind parse_controller_kind(const std::string& text);
const char* to_string(DurationMode mode);
DurationMode parse_duration_mode(const std::string& text);

struct DurationSettings {
    DurationMode mode = DurationMode::Fixed;
    std::int32_t fixed_green = 10;
    std::int32_t min_green = 10;
    std::int32_t max_green = 20;
};

struct ControllerConfig {
    ControllerKind kind = ControllerKind::FixedTime;
    RewardKind reward = RewardKind::Prcol;  // DQN only
    DurationSettings duration{};
};

using IntersectionCounts = std::span<const MovementCounts>;  // 12 entries, slot order

// Green length for `phase`: the configured constant, or the N_pass-driven kinematic duration.
std::int32_t decision_duration(std::uint32_t phase, IntersectionCounts counts, const DurationSettings& duration,
                               const KinematicParams& kinematics);

// Phases cycle 0, 1, 2, 3, 0, ... by decision index.
Decision decide_fixed(std::size_t decision_index, std::int32_t green);

// argmax phase_score over the 4 phases, lowest index on ties.
std::uint32_t best_phase(IntersectionCounts counts, ScoreMetric metric);

Decision decide_maxpressure(IntersectionCounts counts, std::int32_t green);

// Diagnostic baseline: greedy on the PRCOL phase score.
Decision decide_greedy_prcol(IntersectionCounts counts, const DurationSettings& duration,
                             const KinematicParams& kinematics);

// Uniform random phase with probability eps, otherwise argmax Q with lowest index on ties.
std::uint32_t select_dqn_phase(const QNetwork& net, std::span<const double> features, double eps, Rng& rng);

Decision decide_dqn(const QNetwork& net, std::span<const double> features, double eps, Rng& rng,
                    IntersectionCounts counts, const DurationSettings& duration, const KinematicParams& kinematics);

// Reward observed once the action has fully executed.
double reward_of(IntersectionCounts counts_after, RewardKind kind);

struct DecisionContext {
    IntersectionId node{};
    const Observation& observation;
    IntersectionCounts counts;
    std::size_t decision_index = 0;  // per intersection
};

// One decision stream per intersection. Non-learning controllers ignore the RNG.
class Controller {
public:
    virtual ~Controller() = default;
    virtual Decision decide(const DecisionContext& ctx) = 0;
};

class FixedTimeController final : public Controller {
public:
    explicit FixedTimeController(std::int32_t green) : green_(green) {}
    Decision decide(const DecisionContext& ctx) override { return decide_fixed(ctx.decision_index, green_); }

private:
    std::int32_t green_;
};

class MaxPressureController final : public Controller {
public:
    explicit MaxPressureController(std::int32_t green) : green_(green) {}
    Decision decide(const DecisionContext& ctx) override { return decide_maxpressure(ctx.counts, green_); }

private:
    std::int32_t green_;
};

class GreedyPrcolController final : public Controller {
public:
    GreedyPrcolController(DurationSettings duration, KinematicParams kinematics)
        : duration_(duration), kinematics_(kinematics) {}
    Decision decide(const DecisionContext& ctx) override {
        return decide_greedy_prcol(ctx.counts, duration_, kinematics_);
    }

private:
    DurationSettings duration_;
    KinematicParams kinematics_;
};

// Network input: lane counts multiplied by `count_scale`, phase one-hot unchanged.
Observation dqn_features(const Observation& observation, double count_scale);

// Epsilon-greedy policy over a shared Q-network. The network is owned by the caller and may
// be updated between decisions.
class DqnController final : public Controller {
public:
    DqnController(const QNetwork& net, DurationSettings duration, KinematicParams kinematics, double count_scale,
                  std::uint64_t seed);
    void set_epsilon(double eps) { eps_ = eps; }
    double epsilon() const { return eps_; }
    double count_scale() const { return count_scale_; }
    Decision decide(const DecisionContext& ctx) override;

private:
    const QNetwork& net_;
    DurationSettings duration_;
    KinematicParams kinematics_;
    double count_scale_;
    double eps_ = 0.0;
    Rng rng_;
};

// Non-learning controllers for kinds other than Dqn. Throws for Dqn.
std::unique_ptr<Controller> make_baseline_controller(const ControllerConfig& config, const KinematicParams& kinematics);

}  // namespace pdlight

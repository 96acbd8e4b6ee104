#include "pdlight/control.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace pdlight {

const char* to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::FixedTime: return "fixed";
        case ControllerKind::MaxPressure: return "maxpressure";
        case ControllerKind::GreedyPrcol: return "greedy_prcol";
        case ControllerKind::Dqn: return "dqn";
    }
    return "?";
}

ControllerKind parse_controller_kind(const std::string& text) {
    if (text == "fixed") return ControllerKind::FixedTime;
    if (text == "maxpressure") return ControllerKind::MaxPressure;
    if (text == "greedy_prcol") return ControllerKind::GreedyPrcol;
    if (text == "dqn") return ControllerKind::Dqn;
    throw std::invalid_argument("unknown controller kind '" + text + "'");
}

const char* to_string(DurationMode mode) { return mode == DurationMode::Fixed ? "fixed" : "dynamic"; }

DurationMode parse_duration_mode(const std::string& text) {
    if (text == "fixed") return DurationMode::Fixed;
    if (text == "dynamic") return DurationMode::Dynamic;
    throw std::invalid_argument("unknown duration mode '" + text + "'");
}

std::int32_t decision_duration(std::uint32_t phase, IntersectionCounts counts, const DurationSettings& duration,
                               const KinematicParams& kinematics) {
    if (duration.mode == DurationMode::Fixed) return duration.fixed_green;
    static const auto phases = standard_phase_table();
    std::vector<MovementCounts> served;
    for (std::size_t slot : phases.at(phase).movements) served.push_back(counts[slot]);
    return green_duration(served, kinematics, duration.min_green, duration.max_green);
}

Decision decide_fixed(std::size_t decision_index, std::int32_t green) {
    return {static_cast<std::uint32_t>(decision_index % kPhases), green};
}

std::uint32_t best_phase(IntersectionCounts counts, ScoreMetric metric) {
    static const auto phases = standard_phase_table();
    std::uint32_t best = 0;
    double best_score = phase_score(counts, phases[0], metric);
    for (std::uint32_t p = 1; p < kPhases; ++p) {
        const double score = phase_score(counts, phases[p], metric);
        if (score > best_score) {
            best = p;
            best_score = score;
        }
    }
    return best;
}

Decision decide_maxpressure(IntersectionCounts counts, std::int32_t green) {
    return {best_phase(counts, ScoreMetric::Pressure), green};
}

Decision decide_greedy_prcol(IntersectionCounts counts, const DurationSettings& duration,
                             const KinematicParams& kinematics) {
    const auto phase = best_phase(counts, ScoreMetric::Prcol);
    return {phase, decision_duration(phase, counts, duration, kinematics)};
}

std::uint32_t select_dqn_phase(const QNetwork& net, std::span<const double> features, double eps, Rng& rng) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("select_dqn_phase: eps must lie in [0, 1]");
    if (eps > 0.0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < eps) {
            std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(kPhases - 1));
            return pick(rng);
        }
    }
    const Eigen::VectorXd q = net.forward(features);
    std::uint32_t best = 0;
    for (Eigen::Index a = 1; a < q.size(); ++a) {
        if (q(a) > q(best)) best = static_cast<std::uint32_t>(a);
    }
    return best;
}

Decision decide_dqn(const QNetwork& net, std::span<const double> features, double eps, Rng& rng,
                    IntersectionCounts counts, const DurationSettings& duration, const KinematicParams& kinematics) {
    const auto phase = select_dqn_phase(net, features, eps, rng);
    return {phase, decision_duration(phase, counts, duration, kinematics)};
}

double reward_of(IntersectionCounts counts_after, RewardKind kind) { return reward(counts_after, kind); }

Observation dqn_features(const Observation& observation, double count_scale) {
    Observation f = observation;
    for (std::size_t i = 0; i < kMovementsPerIntersection; ++i) f[i] *= count_scale;
    return f;
}

DqnController::DqnController(const QNetwork& net, DurationSettings duration, KinematicParams kinematics,
                             double count_scale, std::uint64_t seed)
    : net_(net), duration_(duration), kinematics_(kinematics), count_scale_(count_scale), rng_(seed) {
    if (net.input_width() != kObservationWidth || net.output_width() != kPhases) {
        throw std::invalid_argument("DqnController: network must map 16 inputs to 4 phases");
    }
}

Decision DqnController::decide(const DecisionContext& ctx) {
    const auto features = dqn_features(ctx.observation, count_scale_);
    return decide_dqn(net_, features, eps_, rng_, ctx.counts, duration_, kinematics_);
}

std::unique_ptr<Controller> make_baseline_controller(const ControllerConfig& config,
                                                     const KinematicParams& kinematics) {
    switch (config.kind) {
        case ControllerKind::FixedTime: return std::make_unique<FixedTimeController>(config.duration.fixed_green);
        case ControllerKind::MaxPressure: return std::make_unique<MaxPressureController>(config.duration.fixed_green);
        case ControllerKind::GreedyPrcol: return std::make_unique<GreedyPrcolController>(config.duration, kinematics);
        case ControllerKind::Dqn: break;
    }
    throw std::invalid_argument("make_baseline_controller: dqn needs a network");
}

}  // namespace pdlight

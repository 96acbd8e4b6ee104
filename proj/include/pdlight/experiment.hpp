#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdlight/control.hpp"
#include "pdlight/engine.hpp"
#include "pdlight/flows.hpp"
#include "pdlight/learner.hpp"
#include "pdlight/netmodel.hpp"

namespace pdlight {

struct LearningConfig {
    std::size_t train_episodes = 100;
    double gamma = 0.8;
    double learning_rate = 0.001;
    std::size_t buffer_capacity = 10000;
    std::size_t batch_size = 32;
    std::size_t target_sync = 5;  // stored transitions between target copies
    double epsilon_start = 0.8;
    double epsilon_end = 0.2;
    std::vector<std::size_t> hidden_layers{32, 32};
    CountMode observation = CountMode::Occupancy;
    double count_scale = 0.1;   // network input = lane count * count_scale
    double reward_scale = 0.1;  // stored reward = reward * reward_scale
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::optional<std::filesystem::path> roadnet_file;  // otherwise `grid`
    GridParams grid{};
    std::optional<std::filesystem::path> flow_file;     // otherwise `flow_generator`
    SyntheticFlow flow_generator = SyntheticFlow::Light;
    ControllerConfig controller{};
    double episode_length = 3600.0;
    std::int32_t yellow = 5;
    KinematicParams kinematics{};
    LearningConfig learning{};
    std::vector<std::uint64_t> seeds{0, 1, 2};
};

// Throws std::invalid_argument naming the first offending field.
void validate(const ExperimentConfig& config);

// Relative file paths resolve against `base_dir`. Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string fingerprint(const ExperimentConfig& config);

// Network and demand materialised once and shared by every episode of a config.
struct Scenario {
    std::shared_ptr<const RoadNetwork> network;
    std::vector<SpawnEvent> events;
};

Scenario build_scenario(const ExperimentConfig& config);

// One row per (tick end, intersection). Decision fields are -1 on rows without a decision.
struct TelemetryRow {
    double time = 0.0;
    std::uint32_t intersection = 0;
    std::uint32_t phase = 0;                 // in effect during the tick ending at `time`
    SignalMode mode = SignalMode::Green;
    std::array<std::int32_t, kMovementsPerIntersection> vehicles{};    // incoming lane counts at `time`
    std::array<std::int32_t, kMovementsPerIntersection> discharged{};  // crossings during the tick
    std::int32_t entered = 0;  // network totals for the tick
    std::int32_t exited = 0;
    std::int32_t decision_phase = -1;
    std::int32_t decision_green = -1;
    std::int32_t ideal_pass = -1;  // sum of n_pass over the chosen phase's movements
};

using Telemetry = std::vector<TelemetryRow>;

void write_telemetry_csv(const Telemetry& rows, std::ostream& out);
void write_telemetry_csv(const Telemetry& rows, const std::filesystem::path& path);
Telemetry read_telemetry_csv(std::istream& in);
Telemetry read_telemetry_csv(const std::filesystem::path& path);

// Mean of (exit - entry) for finished vehicles and (horizon - entry) for the rest.
double avg_travel_time(std::span<const VehicleState> vehicles, double horizon);
std::int64_t throughput(std::span<const VehicleState> vehicles);

// Network, target network, replay memory and counters that persist across training episodes.
struct LearnerState {
    Rng rng;  // declared first: it seeds the network initialisation
    QNetwork net;
    QNetwork target;
    ReplayBuffer buffer;
    std::size_t stored = 0;
    std::size_t train_steps = 0;

    LearnerState(const LearningConfig& config, std::uint64_t seed);
};

struct EpisodeOptions {
    bool record_telemetry = false;
    LearnerState* learner = nullptr;  // non-null: store transitions and train
};

struct EpisodeResult {
    double avg_travel_time = 0.0;
    std::int64_t throughput = 0;
    std::int64_t generated = 0;
    std::size_t decisions = 0;
    std::size_t train_steps = 0;
    double loss_mean = 0.0;  // over this episode's train steps, 0 when none
    double end_time = 0.0;   // simulation time when the last action completed
    Telemetry telemetry;
};

// Each intersection decides whenever its green runs out, until its elapsed signal time
// (greens plus yellows) reaches the episode length. Metrics are taken at exactly T.
EpisodeResult run_episode(const ExperimentConfig& config, const Scenario& scenario, Controller& controller,
                          const EpisodeOptions& options = {});

// Derives independent stream seeds from one experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct CurvePoint {
    std::size_t episode = 0;
    double epsilon = 0.0;
    double train_avg_travel_time = 0.0;
    std::int64_t train_throughput = 0;
    double eval_avg_travel_time = 0.0;
    std::int64_t eval_throughput = 0;
    double loss_mean = 0.0;
    std::size_t train_steps = 0;
};

struct TrainResult {
    std::uint64_t seed = 0;
    std::vector<CurvePoint> curve;
    QNetwork best;
    QNetwork final_net;
    std::size_t best_episode = 0;
};

// Runs the configured number of episodes for one seed, evaluating greedily after each.
TrainResult train(const ExperimentConfig& config, const Scenario& scenario, std::uint64_t seed);

// Greedy (eps = 0) episode with learning off. Rejects non-DQN configs and mismatched networks.
EpisodeResult evaluate(const ExperimentConfig& config, const Scenario& scenario, const QNetwork& net,
                       bool record_telemetry = false);

// Baseline controllers only.
EpisodeResult run_baseline(const ExperimentConfig& config, const Scenario& scenario, bool record_telemetry = false);

struct SeedMetrics {
    std::uint64_t seed = 0;
    double avg_travel_time = 0.0;
    std::int64_t throughput = 0;
    std::int64_t generated = 0;
    std::optional<double> final_avg_travel_time;  // DQN: greedy evaluation of the last episode
    std::optional<std::int64_t> final_throughput;
    std::optional<double> last_train_avg_travel_time;
    std::optional<std::size_t> best_episode;
};

struct MetricsReport {
    std::string name;
    std::string controller;
    std::string fingerprint;
    std::vector<SeedMetrics> seeds;
    double median_avg_travel_time = 0.0;
    double median_throughput = 0.0;
};

double median(std::vector<double> values);
MetricsReport summarize(const ExperimentConfig& config, std::vector<SeedMetrics> seeds);
nlohmann::json to_json(const MetricsReport& report);

void write_learning_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

// Text table with one row per report.
std::string comparison_table(std::span<const MetricsReport> reports);

}  // namespace pdlight

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "pdlight/experiment.hpp"

namespace pdlight {

// Calls fn(0..n-1) on up to `jobs` worker threads. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct ExperimentOutcome {
    MetricsReport report;
    std::vector<TrainResult> trained;  // DQN only, in seed order
    Telemetry telemetry;               // first seed: greedy run of the best network, or the baseline run
};

// Every configured seed: baselines run one episode, DQN configs train and then evaluate
// the best network greedily. With `out_dir`, writes metrics.json, telemetry.csv and, for
// DQN, learning_curve.csv plus per-seed checkpoints.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir,
                                 std::size_t jobs = 1);

void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace pdlight

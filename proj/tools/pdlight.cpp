// Command-line front end: flow generation, runs, training, evaluation, comparisons and
// case-study tables.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "pdlight/casestudy.hpp"
#include "pdlight/experiment.hpp"
#include "pdlight/flows.hpp"
#include "pdlight/orchestrate.hpp"
#include "pdlight/roadnet_io.hpp"

namespace fs = std::filesystem;
using namespace pdlight;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

int generate_flow(const std::string& kind, const fs::path& out, const std::optional<fs::path>& roadnet_in,
                  const std::optional<fs::path>& roadnet_out, double horizon) {
    const auto network = roadnet_in ? load_roadnet(*roadnet_in, VehicleGeometry{}) : build_grid(GridParams{});
    const auto flow = parse_synthetic_flow(kind);
    const auto events = flow == SyntheticFlow::Light ? gen_syn_light(network, horizon) : gen_syn_heavy(network, horizon);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_flow_file(events, network, out);
    if (roadnet_out) save_roadnet(network, *roadnet_out);
    spdlog::info("wrote {} events to {}", events.size(), out.string());
    return 0;
}

int run(const fs::path& config_path, std::uint64_t seed, const fs::path& out, const std::optional<fs::path>& checkpoint) {
    auto config = load_config(config_path);
    config.seeds = {seed};
    const Scenario scenario = build_scenario(config);
    Stopwatch clock;
    EpisodeResult result;
    if (config.controller.kind == ControllerKind::Dqn) {
        if (!checkpoint) throw std::invalid_argument("run: a dqn config needs --checkpoint (or use train)");
        result = evaluate(config, scenario, load_checkpoint(*checkpoint), true);
    } else {
        result = run_baseline(config, scenario, true);
    }
    fs::create_directories(out);
    SeedMetrics m{seed, result.avg_travel_time, result.throughput, result.generated};
    write_json(to_json(summarize(config, {m})), out / "metrics.json");
    write_telemetry_csv(result.telemetry, out / "telemetry.csv");
    spdlog::info("average travel time {:.2f} s, throughput {}/{} ({:.2f} s wall clock)", result.avg_travel_time,
                 result.throughput, result.generated, clock.seconds());
    return 0;
}

int train_cmd(const fs::path& config_path, const fs::path& out, std::size_t jobs) {
    const auto config = load_config(config_path);
    if (config.controller.kind != ControllerKind::Dqn) {
        throw std::invalid_argument(std::string("train: controller kind is ") + to_string(config.controller.kind) +
                                    ", expected dqn");
    }
    Stopwatch clock;
    const auto outcome = run_experiment(config, out, jobs);
    spdlog::info("median average travel time {:.2f} s over {} seeds ({:.1f} s wall clock)",
                 outcome.report.median_avg_travel_time, outcome.report.seeds.size(), clock.seconds());
    return 0;
}

int eval_cmd(const fs::path& config_path, const fs::path& checkpoint, const fs::path& out,
             std::optional<std::uint64_t> seed) {
    auto config = load_config(config_path);
    if (seed) config.seeds = {*seed};
    config.seeds.resize(1);
    const Scenario scenario = build_scenario(config);
    Stopwatch clock;
    const auto result = evaluate(config, scenario, load_checkpoint(checkpoint), true);
    fs::create_directories(out);
    SeedMetrics m{config.seeds.front(), result.avg_travel_time, result.throughput, result.generated};
    write_json(to_json(summarize(config, {m})), out / "metrics.json");
    write_telemetry_csv(result.telemetry, out / "telemetry.csv");
    spdlog::info("greedy evaluation: average travel time {:.2f} s, throughput {} ({:.2f} s wall clock)",
                 result.avg_travel_time, result.throughput, clock.seconds());
    return 0;
}

int compare_cmd(const std::vector<fs::path>& configs, const fs::path& out, std::size_t jobs) {
    std::vector<ExperimentConfig> loaded;
    for (const auto& p : configs) loaded.push_back(load_config(p));
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (loaded[i].name == loaded[j].name) {
                throw std::invalid_argument("compare: two configs share the name '" + loaded[i].name + "'");
            }
        }
    }
    fs::create_directories(out);
    std::vector<MetricsReport> reports;
    nlohmann::json all = nlohmann::json::array();
    for (const auto& config : loaded) {
        Stopwatch clock;
        reports.push_back(run_experiment(config, out / config.name, jobs).report);
        all.push_back(to_json(reports.back()));
        spdlog::info("{} done ({:.1f} s wall clock)", config.name, clock.seconds());
    }
    write_json(all, out / "metrics.json");
    const auto table = comparison_table(reports);
    std::ofstream(out / "comparison.txt") << table;
    std::cout << table;
    return 0;
}

int case_study_cmd(const fs::path& telemetry, const fs::path& out) {
    const auto study = case_study(read_telemetry_csv(telemetry));
    write_case_study(study, out);
    std::cout << summary_json(study).dump(2) << '\n';
    return 0;
}

int flow_stats_cmd(const fs::path& config_path, const std::string& road, const fs::path& out) {
    const auto config = load_config(config_path);
    const auto scenario = build_scenario(config);
    const auto id = scenario.network->find_road(road);
    if (!id) throw std::invalid_argument("flow-stats: unknown road '" + road + "'");
    std::ofstream csv(out);
    if (!csv) throw std::runtime_error("cannot write " + out.string());
    csv << "lane,time,gap\n";
    for (LaneId lane : scenario.network->road(*id).lanes) {
        const auto stats = arrival_interval_stats(scenario.events, lane);
        for (const auto& [t, gap] : stats.series) csv << scenario.network->lane(lane).name << ',' << t << ',' << gap << '\n';
        if (stats.mean_gap) spdlog::info("{}: mean arrival interval {:.2f} s", scenario.network->lane(lane).name, *stats.mean_gap);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("pdlight"));
    spdlog::cfg::load_env_levels();

    CLI::App app{"Traffic signal control experiments on a queue-based grid simulator"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate-flow", "Write a synthetic flow file");
    std::string gen_kind;
    fs::path gen_out;
    std::optional<fs::path> gen_roadnet, gen_roadnet_out;
    double gen_horizon = 3600.0;
    gen->add_option("kind", gen_kind, "syn-light or syn-heavy")->required();
    gen->add_option("--out", gen_out, "Flow file to write")->required();
    gen->add_option("--roadnet", gen_roadnet, "Road network file (default: 3x3 grid, 300 m roads)");
    gen->add_option("--roadnet-out", gen_roadnet_out, "Also write the road network used");
    gen->add_option("--horizon", gen_horizon, "Demand horizon in seconds");

    auto* run_sc = app.add_subcommand("run", "Run one episode of a baseline, or of a trained network");
    fs::path run_config, run_out;
    std::uint64_t run_seed = 0;
    std::optional<fs::path> run_ckpt;
    run_sc->add_option("--config", run_config)->required()->check(CLI::ExistingFile);
    run_sc->add_option("--seed", run_seed);
    run_sc->add_option("--out", run_out)->required();
    run_sc->add_option("--checkpoint", run_ckpt)->check(CLI::ExistingFile);

    auto* train_sc = app.add_subcommand("train", "Train a DQN controller for every configured seed");
    fs::path train_config, train_out;
    std::size_t jobs = default_jobs();
    train_sc->add_option("--config", train_config)->required()->check(CLI::ExistingFile);
    train_sc->add_option("--out", train_out)->required();
    train_sc->add_option("--jobs", jobs, "Seeds trained in parallel");

    auto* eval_sc = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
    fs::path eval_config, eval_ckpt, eval_out;
    std::optional<std::uint64_t> eval_seed;
    eval_sc->add_option("--config", eval_config)->required()->check(CLI::ExistingFile);
    eval_sc->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
    eval_sc->add_option("--out", eval_out)->required();
    eval_sc->add_option("--seed", eval_seed);

    auto* cmp = app.add_subcommand("compare", "Run several configs and tabulate them");
    std::vector<fs::path> cmp_configs;
    fs::path cmp_out;
    cmp->add_option("--configs", cmp_configs)->required()->check(CLI::ExistingFile);
    cmp->add_option("--out", cmp_out)->required();
    cmp->add_option("--jobs", jobs, "Seeds run in parallel");

    auto* cs = app.add_subcommand("case-study", "Derive decision tables from a telemetry file");
    fs::path cs_telemetry, cs_out;
    cs->add_option("--telemetry", cs_telemetry)->required()->check(CLI::ExistingFile);
    cs->add_option("--out", cs_out)->required();

    auto* fs_sc = app.add_subcommand("flow-stats", "Arrival intervals on the lanes of one road");
    fs::path fs_config, fs_out;
    std::string fs_road;
    fs_sc->add_option("--config", fs_config)->required()->check(CLI::ExistingFile);
    fs_sc->add_option("--road", fs_road)->required();
    fs_sc->add_option("--out", fs_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen) return generate_flow(gen_kind, gen_out, gen_roadnet, gen_roadnet_out, gen_horizon);
        if (*run_sc) return run(run_config, run_seed, run_out, run_ckpt);
        if (*train_sc) return train_cmd(train_config, train_out, jobs);
        if (*eval_sc) return eval_cmd(eval_config, eval_ckpt, eval_out, eval_seed);
        if (*cmp) return compare_cmd(cmp_configs, cmp_out, jobs);
        if (*cs) return case_study_cmd(cs_telemetry, cs_out);
        if (*fs_sc) return flow_stats_cmd(fs_config, fs_road, fs_out);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 1;
}

#include "pdlight/orchestrate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

namespace pdlight {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

namespace {

void write_combined_curve(const std::vector<TrainResult>& trained, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "seed,episode,epsilon,train_att,train_throughput,eval_att,eval_throughput,loss_mean,train_steps\n";
    for (const auto& t : trained) {
        for (const auto& p : t.curve) {
            out << t.seed << ',' << p.episode << ',' << p.epsilon << ',' << p.train_avg_travel_time << ','
                << p.train_throughput << ',' << p.eval_avg_travel_time << ',' << p.eval_throughput << ','
                << p.loss_mean << ',' << p.train_steps << '\n';
        }
    }
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir,
                                 std::size_t jobs) {
    validate(config);
    const Scenario scenario = build_scenario(config);
    const std::size_t n = config.seeds.size();
    std::vector<SeedMetrics> metrics(n);
    std::vector<std::optional<TrainResult>> trained(n);
    std::vector<Telemetry> telemetry(n);
    const bool learning = config.controller.kind == ControllerKind::Dqn;
    if (out_dir) std::filesystem::create_directories(*out_dir);

    parallel_for(n, jobs, [&](std::size_t i) {
        const auto seed = config.seeds[i];
        const bool record = out_dir.has_value() || i == 0;
        SeedMetrics m;
        m.seed = seed;
        if (learning) {
            auto t = train(config, scenario, seed);
            auto best = evaluate(config, scenario, t.best, record);
            m.avg_travel_time = best.avg_travel_time;
            m.throughput = best.throughput;
            m.generated = best.generated;
            m.final_avg_travel_time = t.curve.back().eval_avg_travel_time;
            m.final_throughput = t.curve.back().eval_throughput;
            m.last_train_avg_travel_time = t.curve.back().train_avg_travel_time;
            m.best_episode = t.best_episode;
            if (out_dir) {
                const auto dir = *out_dir / ("seed_" + std::to_string(seed));
                std::filesystem::create_directories(dir);
                write_learning_curve_csv(t.curve, dir / "learning_curve.csv");
                save_checkpoint(t.best, dir / "best.ckpt");
                save_checkpoint(t.final_net, dir / "final.ckpt");
                write_telemetry_csv(best.telemetry, dir / "telemetry.csv");
            }
            telemetry[i] = std::move(best.telemetry);
            trained[i] = std::move(t);
        } else {
            auto run = run_baseline(config, scenario, record);
            m.avg_travel_time = run.avg_travel_time;
            m.throughput = run.throughput;
            m.generated = run.generated;
            telemetry[i] = std::move(run.telemetry);
        }
        spdlog::info("{} seed {}: average travel time {:.2f} s, throughput {}", config.name, seed, m.avg_travel_time,
                     m.throughput);
        metrics[i] = m;
    });

    ExperimentOutcome out{summarize(config, metrics), {}, std::move(telemetry.front())};
    for (auto& t : trained) {
        if (t) out.trained.push_back(std::move(*t));
    }
    if (out_dir) {
        write_json(to_json(out.report), *out_dir / "metrics.json");
        write_telemetry_csv(out.telemetry, *out_dir / "telemetry.csv");
        if (learning) write_combined_curve(out.trained, *out_dir / "learning_curve.csv");
    }
    return out;
}

}  // namespace pdlight

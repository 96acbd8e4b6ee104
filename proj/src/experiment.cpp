#include "pdlight/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "pdlight/roadnet_io.hpp"

namespace pdlight {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: " + field + " " + why);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(where.empty() ? "document" : where, "must be an object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) bad(where.empty() ? key : where + "." + key, "is not a known setting");
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        bad(where.empty() ? std::string(key) : where + "." + key, "has the wrong type");
    }
}

const char* to_string(CountMode mode) { return mode == CountMode::Occupancy ? "occupancy" : "queued"; }

CountMode parse_count_mode(const std::string& text) {
    if (text == "occupancy") return CountMode::Occupancy;
    if (text == "queued") return CountMode::Queued;
    bad("learning.observation", "must be 'occupancy' or 'queued'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void validate(const ExperimentConfig& c) {
    if (!(c.episode_length > 0.0) || c.episode_length != std::floor(c.episode_length)) {
        bad("episode_length", "must be a positive whole number of seconds");
    }
    if (c.yellow < 0) bad("yellow", "must not be negative");
    const auto& k = c.kinematics;
    if (!(k.acceleration > 0.0) || !(k.max_speed > 0.0) || !(k.vehicle_length > 0.0) || !(k.min_gap > 0.0)) {
        bad("kinematics", "must be positive");
    }
    if (!c.roadnet_file && (c.grid.rows == 0 || c.grid.cols == 0 || !(c.grid.we_length > 0.0) || !(c.grid.ns_length > 0.0))) {
        bad("roadnet.grid", "needs positive rows, cols and lengths");
    }
    const auto& d = c.controller.duration;
    if (d.fixed_green <= 0) bad("controller.fixed_green", "must be positive");
    if (d.min_green <= 0 || d.min_green > d.max_green) bad("controller.min_green", "must be positive and <= max_green");
    const auto& l = c.learning;
    if (l.train_episodes == 0) bad("learning.train_episodes", "must be positive");
    if (!(l.gamma >= 0.0 && l.gamma <= 1.0)) bad("learning.gamma", "must lie in [0, 1]");
    if (!(l.learning_rate > 0.0)) bad("learning.learning_rate", "must be positive");
    if (l.buffer_capacity == 0) bad("learning.buffer_capacity", "must be positive");
    if (l.batch_size == 0 || l.batch_size >= l.buffer_capacity) bad("learning.batch_size", "must be in [1, buffer_capacity)");
    if (l.target_sync == 0) bad("learning.target_sync", "must be positive");
    for (double e : {l.epsilon_start, l.epsilon_end}) {
        if (!(e >= 0.0 && e <= 1.0)) bad("learning.epsilon", "must lie in [0, 1]");
    }
    for (auto h : l.hidden_layers) {
        if (h == 0) bad("learning.hidden_layers", "must be positive");
    }
    if (!(l.count_scale > 0.0) || !(l.reward_scale > 0.0)) bad("learning.scales", "must be positive");
    if (c.seeds.empty()) bad("seeds", "must not be empty");
}

ExperimentConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    check_keys(doc, "", {"name", "roadnet", "flow", "controller", "episode_length", "yellow", "kinematics", "learning",
                         "seeds"});
    read(doc, "name", c.name, "");
    read(doc, "episode_length", c.episode_length, "");
    read(doc, "yellow", c.yellow, "");
    read(doc, "seeds", c.seeds, "");

    if (doc.contains("kinematics")) {
        const auto& k = doc.at("kinematics");
        check_keys(k, "kinematics", {"acceleration", "max_speed", "vehicle_length", "min_gap"});
        read(k, "acceleration", c.kinematics.acceleration, "kinematics");
        read(k, "max_speed", c.kinematics.max_speed, "kinematics");
        read(k, "vehicle_length", c.kinematics.vehicle_length, "kinematics");
        read(k, "min_gap", c.kinematics.min_gap, "kinematics");
    }
    c.grid.vehicle = {c.kinematics.vehicle_length, c.kinematics.min_gap};
    c.grid.max_speed = c.kinematics.max_speed;

    if (doc.contains("roadnet")) {
        const auto& r = doc.at("roadnet");
        check_keys(r, "roadnet", {"file", "grid"});
        if (r.contains("file") == r.contains("grid")) bad("roadnet", "needs exactly one of 'file' or 'grid'");
        if (r.contains("file")) {
            std::string p;
            read(r, "file", p, "roadnet");
            c.roadnet_file = resolve(base_dir, p);
        } else {
            const auto& g = r.at("grid");
            check_keys(g, "roadnet.grid", {"rows", "cols", "we_length", "ns_length"});
            read(g, "rows", c.grid.rows, "roadnet.grid");
            read(g, "cols", c.grid.cols, "roadnet.grid");
            read(g, "we_length", c.grid.we_length, "roadnet.grid");
            read(g, "ns_length", c.grid.ns_length, "roadnet.grid");
        }
    }
    if (doc.contains("flow")) {
        const auto& f = doc.at("flow");
        check_keys(f, "flow", {"file", "generator"});
        if (f.contains("file") == f.contains("generator")) bad("flow", "needs exactly one of 'file' or 'generator'");
        std::string v;
        if (f.contains("file")) {
            read(f, "file", v, "flow");
            c.flow_file = resolve(base_dir, v);
        } else {
            read(f, "generator", v, "flow");
            try {
                c.flow_generator = parse_synthetic_flow(v);
            } catch (const std::invalid_argument& e) {
                bad("flow.generator", e.what());
            }
        }
    }
    if (doc.contains("controller")) {
        const auto& ctl = doc.at("controller");
        check_keys(ctl, "controller", {"kind", "reward", "duration_mode", "fixed_green", "min_green", "max_green"});
        std::string v;
        try {
            if (ctl.contains("kind")) c.controller.kind = parse_controller_kind(ctl.at("kind").get<std::string>());
            if (ctl.contains("reward")) c.controller.reward = parse_reward_kind(ctl.at("reward").get<std::string>());
            if (ctl.contains("duration_mode")) {
                c.controller.duration.mode = parse_duration_mode(ctl.at("duration_mode").get<std::string>());
            }
        } catch (const json::exception&) {
            bad("controller", "kind, reward and duration_mode must be strings");
        } catch (const std::invalid_argument& e) {
            bad("controller", e.what());
        }
        read(ctl, "fixed_green", c.controller.duration.fixed_green, "controller");
        read(ctl, "min_green", c.controller.duration.min_green, "controller");
        read(ctl, "max_green", c.controller.duration.max_green, "controller");
    }
    if (doc.contains("learning")) {
        const auto& l = doc.at("learning");
        check_keys(l, "learning", {"train_episodes", "gamma", "learning_rate", "buffer_capacity", "batch_size",
                                   "target_sync", "epsilon_start", "epsilon_end", "hidden_layers", "observation",
                                   "count_scale", "reward_scale"});
        auto& L = c.learning;
        read(l, "train_episodes", L.train_episodes, "learning");
        read(l, "gamma", L.gamma, "learning");
        read(l, "learning_rate", L.learning_rate, "learning");
        read(l, "buffer_capacity", L.buffer_capacity, "learning");
        read(l, "batch_size", L.batch_size, "learning");
        read(l, "target_sync", L.target_sync, "learning");
        read(l, "epsilon_start", L.epsilon_start, "learning");
        read(l, "epsilon_end", L.epsilon_end, "learning");
        read(l, "hidden_layers", L.hidden_layers, "learning");
        read(l, "count_scale", L.count_scale, "learning");
        read(l, "reward_scale", L.reward_scale, "learning");
        std::string obs;
        read(l, "observation", obs, "learning");
        if (!obs.empty()) L.observation = parse_count_mode(obs);
    }
    validate(c);
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json doc;
    doc["name"] = c.name;
    if (c.roadnet_file) {
        doc["roadnet"] = {{"file", c.roadnet_file->string()}};
    } else {
        doc["roadnet"] = {{"grid",
                           {{"rows", c.grid.rows},
                            {"cols", c.grid.cols},
                            {"we_length", c.grid.we_length},
                            {"ns_length", c.grid.ns_length}}}};
    }
    if (c.flow_file) {
        doc["flow"] = {{"file", c.flow_file->string()}};
    } else {
        doc["flow"] = {{"generator", to_string(c.flow_generator)}};
    }
    const auto& d = c.controller.duration;
    doc["controller"] = {{"kind", to_string(c.controller.kind)},
                         {"reward", to_string(c.controller.reward)},
                         {"duration_mode", to_string(d.mode)},
                         {"fixed_green", d.fixed_green},
                         {"min_green", d.min_green},
                         {"max_green", d.max_green}};
    doc["episode_length"] = c.episode_length;
    doc["yellow"] = c.yellow;
    doc["kinematics"] = {{"acceleration", c.kinematics.acceleration},
                         {"max_speed", c.kinematics.max_speed},
                         {"vehicle_length", c.kinematics.vehicle_length},
                         {"min_gap", c.kinematics.min_gap}};
    const auto& l = c.learning;
    doc["learning"] = {{"train_episodes", l.train_episodes}, {"gamma", l.gamma},
                       {"learning_rate", l.learning_rate},   {"buffer_capacity", l.buffer_capacity},
                       {"batch_size", l.batch_size},         {"target_sync", l.target_sync},
                       {"epsilon_start", l.epsilon_start},   {"epsilon_end", l.epsilon_end},
                       {"hidden_layers", l.hidden_layers},   {"observation", to_string(l.observation)},
                       {"count_scale", l.count_scale},       {"reward_scale", l.reward_scale}};
    doc["seeds"] = c.seeds;
    return doc;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    try {
        return config_from_json(doc, path.parent_path());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

std::string fingerprint(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(config).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

Scenario build_scenario(const ExperimentConfig& config) {
    validate(config);
    Scenario s;
    const VehicleGeometry geom{config.kinematics.vehicle_length, config.kinematics.min_gap};
    auto net = std::make_shared<RoadNetwork>(config.roadnet_file ? load_roadnet(*config.roadnet_file, geom)
                                                                 : build_grid(config.grid));
    s.network = net;
    if (config.flow_file) {
        s.events = load_flow_file(*config.flow_file, *net);
    } else {
        const VehicleSpec vehicle{config.kinematics.vehicle_length, config.kinematics.min_gap,
                                  config.kinematics.max_speed, config.kinematics.acceleration};
        s.events = config.flow_generator == SyntheticFlow::Light
                       ? gen_syn_light(*net, config.episode_length, vehicle)
                       : gen_syn_heavy(*net, config.episode_length, vehicle);
    }
    return s;
}

// ---------------------------------------------------------------------------------------------
// Telemetry CSV

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> telemetry_header() {
    std::vector<std::string> h{"time", "intersection", "phase", "mode"};
    for (std::size_t i = 0; i < kMovementsPerIntersection; ++i) h.push_back("q" + std::to_string(i));
    for (std::size_t i = 0; i < kMovementsPerIntersection; ++i) h.push_back("d" + std::to_string(i));
    for (const char* c : {"entered", "exited", "decision_phase", "decision_green", "ideal_pass"}) h.emplace_back(c);
    return h;
}

}  // namespace

void write_telemetry_csv(const Telemetry& rows, std::ostream& out) {
    const auto header = telemetry_header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : rows) {
        out << format_number(r.time) << ',' << r.intersection << ',' << r.phase << ','
            << (r.mode == SignalMode::Green ? 'G' : 'Y');
        for (auto q : r.vehicles) out << ',' << q;
        for (auto d : r.discharged) out << ',' << d;
        out << ',' << r.entered << ',' << r.exited << ',' << r.decision_phase << ',' << r.decision_green << ','
            << r.ideal_pass << '\n';
    }
}

void write_telemetry_csv(const Telemetry& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_telemetry_csv(rows, out);
}

Telemetry read_telemetry_csv(std::istream& in) {
    const auto header = telemetry_header();
    std::string line;
    Telemetry rows;
    if (!std::getline(in, line)) return rows;
    {
        std::string expected;
        for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != expected) throw std::invalid_argument("telemetry: unexpected header");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() != header.size()) {
            throw std::invalid_argument("telemetry line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " fields");
        }
        auto as_int = [&](std::size_t i) {
            std::int64_t v = 0;
            const auto& s = cells[i];
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw std::invalid_argument("telemetry line " + std::to_string(lineno) + ": bad " + header[i]);
            }
            return v;
        };
        TelemetryRow r;
        {
            const auto& s = cells[0];
            const auto res = std::from_chars(s.data(), s.data() + s.size(), r.time);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw std::invalid_argument("telemetry line " + std::to_string(lineno) + ": bad time");
            }
        }
        r.intersection = static_cast<std::uint32_t>(as_int(1));
        r.phase = static_cast<std::uint32_t>(as_int(2));
        if (cells[3] == "G") {
            r.mode = SignalMode::Green;
        } else if (cells[3] == "Y") {
            r.mode = SignalMode::Yellow;
        } else {
            throw std::invalid_argument("telemetry line " + std::to_string(lineno) + ": bad mode");
        }
        std::size_t col = 4;
        for (auto& q : r.vehicles) q = static_cast<std::int32_t>(as_int(col++));
        for (auto& d : r.discharged) d = static_cast<std::int32_t>(as_int(col++));
        r.entered = static_cast<std::int32_t>(as_int(col++));
        r.exited = static_cast<std::int32_t>(as_int(col++));
        r.decision_phase = static_cast<std::int32_t>(as_int(col++));
        r.decision_green = static_cast<std::int32_t>(as_int(col++));
        r.ideal_pass = static_cast<std::int32_t>(as_int(col++));
        if (r.phase >= kPhases || r.decision_phase >= static_cast<std::int32_t>(kPhases) || r.decision_phase < -1) {
            throw std::invalid_argument("telemetry line " + std::to_string(lineno) + ": phase out of range");
        }
        rows.push_back(r);
    }
    return rows;
}

Telemetry read_telemetry_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open telemetry " + path.string());
    try {
        return read_telemetry_csv(in);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------------------------
// Metrics

double avg_travel_time(std::span<const VehicleState> vehicles, double horizon) {
    if (vehicles.empty()) return 0.0;
    double total = 0.0;
    for (const auto& v : vehicles) {
        const double end = v.exited_at ? std::min(*v.exited_at, horizon) : horizon;
        total += end - v.entered_at;
    }
    return total / static_cast<double>(vehicles.size());
}

std::int64_t throughput(std::span<const VehicleState> vehicles) {
    return std::count_if(vehicles.begin(), vehicles.end(), [](const VehicleState& v) {
        return v.exited_at.has_value() && v.next_movement == v.route.movements.size();
    });
}

// ---------------------------------------------------------------------------------------------
// Episode loop

namespace {

std::vector<std::size_t> layer_sizes(const LearningConfig& l) {
    std::vector<std::size_t> sizes{kObservationWidth};
    sizes.insert(sizes.end(), l.hidden_layers.begin(), l.hidden_layers.end());
    sizes.push_back(kPhases);
    return sizes;
}

}  // namespace

LearnerState::LearnerState(const LearningConfig& config, std::uint64_t seed)
    : rng(seed),
      net(QNetwork::initialized(layer_sizes(config), rng)),
      target(net),
      buffer(config.buffer_capacity) {}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over (seed, stream)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

EpisodeResult run_episode(const ExperimentConfig& config, const Scenario& scenario, Controller& controller,
                          const EpisodeOptions& options) {
    validate(config);
    if (!scenario.network) throw std::invalid_argument("run_episode: scenario has no network");
    const auto& net = *scenario.network;
    World world(scenario.network, scenario.events, WorldOptions{config.kinematics, config.yellow});

    const double horizon = config.episode_length;
    const std::size_t n_nodes = net.intersections.size();
    const auto& learn = config.learning;
    LearnerState* learner = options.learner;
    if (learner && config.controller.kind != ControllerKind::Dqn) {
        throw std::invalid_argument("run_episode: only the dqn controller learns");
    }
    static const auto phases = standard_phase_table();

    struct NodeState {
        double t_sum = 0.0;
        std::size_t decisions = 0;
        bool done = false;
        bool pending = false;
        Observation features{};
        std::uint32_t action = 0;
    };
    std::vector<NodeState> nodes(n_nodes);

    EpisodeResult result;
    double loss_total = 0.0;
    Telemetry& rows = result.telemetry;

    auto append_rows = [&](double time, const StepTelemetry* step) {
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const auto id = static_cast<IntersectionId>(i);
            const auto& node = net.intersection(id);
            TelemetryRow r;
            r.time = time;
            r.intersection = static_cast<std::uint32_t>(i);
            if (step) {
                r.phase = step->phase[i];
                r.mode = step->mode[i];
                r.entered = step->entered;
                r.exited = step->exited;
                for (std::size_t s = 0; s < kMovementsPerIntersection; ++s) {
                    r.vehicles[s] = step->lane_occupancy[index(node.incoming_lanes[s])];
                    r.discharged[s] = step->discharged[index(make_movement_id(id, s))];
                }
            } else {
                r.phase = world.signal(id).current_phase;
                r.mode = world.signal(id).mode;
                for (std::size_t s = 0; s < kMovementsPerIntersection; ++s) {
                    r.vehicles[s] = world.occupancy(node.incoming_lanes[s]);
                }
            }
            rows.push_back(r);
        }
    };

    auto decision_pass = [&]() {
        const std::size_t row_base = options.record_telemetry ? rows.size() - n_nodes : 0;
        for (std::size_t i = 0; i < n_nodes; ++i) {
            auto& ns = nodes[i];
            if (ns.done) continue;
            const auto id = static_cast<IntersectionId>(i);
            const auto& sig = world.signal(id);
            if (sig.mode != SignalMode::Green || sig.time_remaining > 0) continue;

            const auto counts = world.intersection_counts(id);
            const Observation obs = observe(world, id, learn.observation);
            if (ns.pending && learner) {
                Transition tr;
                tr.state = ns.features;
                tr.action = ns.action;
                tr.reward = reward_of(counts, config.controller.reward) * learn.reward_scale;
                tr.next_state = dqn_features(obs, learn.count_scale);
                tr.terminal = ns.t_sum >= horizon;
                learner->buffer.push(tr);
                ++learner->stored;
                if (auto batch = learner->buffer.sample(learn.batch_size, learner->rng)) {
                    loss_total += train_step(learner->net, learner->target, *batch, learn.gamma, learn.learning_rate);
                    ++learner->train_steps;
                    ++result.train_steps;
                }
                if (learner->stored % learn.target_sync == 0) sync_target(learner->net, learner->target);
            }
            ns.pending = false;
            if (ns.t_sum >= horizon) {
                ns.done = true;
                continue;
            }

            const Decision d = controller.decide(DecisionContext{id, obs, counts, ns.decisions});
            if (d.phase >= kPhases || d.green_duration <= 0) {
                throw std::logic_error("controller produced an invalid decision");
            }
            const bool extends = sig.mode == SignalMode::Green && sig.current_phase == d.phase;
            world.apply_decision(id, d.phase, d.green_duration);
            ns.t_sum += d.green_duration + (extends ? 0 : config.yellow);
            ++ns.decisions;
            ++result.decisions;
            if (options.record_telemetry) {
                std::int32_t ideal = 0;
                for (std::size_t slot : phases[d.phase].movements) ideal += n_pass(counts[slot]);
                auto& r = rows[row_base + i];
                r.decision_phase = static_cast<std::int32_t>(d.phase);
                r.decision_green = d.green_duration;
                r.ideal_pass = ideal;
            }
            if (learner) {
                ns.pending = true;
                ns.features = dqn_features(obs, learn.count_scale);
                ns.action = d.phase;
            }
        }
    };

    if (options.record_telemetry) append_rows(0.0, nullptr);
    decision_pass();
    bool measured = false;
    auto measure = [&]() {
        result.avg_travel_time = avg_travel_time(world.vehicles(), horizon);
        result.throughput = throughput(world.vehicles());
        result.generated = world.entered_total();
        measured = true;
    };
    while (true) {
        const bool all_done = std::all_of(nodes.begin(), nodes.end(), [](const NodeState& n) { return n.done; });
        if (all_done && world.time() >= horizon) break;
        const auto step = world.step();
        if (options.record_telemetry) append_rows(step.time, &step);
        if (!measured && world.time() >= horizon) measure();
        decision_pass();
    }
    if (!measured) measure();
    result.end_time = world.time();
    result.loss_mean = result.train_steps ? loss_total / static_cast<double>(result.train_steps) : 0.0;
    return result;
}

// ---------------------------------------------------------------------------------------------
// Training, evaluation, baselines

EpisodeResult evaluate(const ExperimentConfig& config, const Scenario& scenario, const QNetwork& net,
                       bool record_telemetry) {
    if (config.controller.kind != ControllerKind::Dqn) {
        throw std::invalid_argument(std::string("evaluate: needs a dqn config, got ") + to_string(config.controller.kind));
    }
    if (net.layer_sizes() != layer_sizes(config.learning)) {
        throw std::invalid_argument("evaluate: checkpoint architecture does not match the config");
    }
    DqnController controller(net, config.controller.duration, config.kinematics, config.learning.count_scale, 0);
    controller.set_epsilon(0.0);
    return run_episode(config, scenario, controller, EpisodeOptions{record_telemetry, nullptr});
}

EpisodeResult run_baseline(const ExperimentConfig& config, const Scenario& scenario, bool record_telemetry) {
    auto controller = make_baseline_controller(config.controller, config.kinematics);
    return run_episode(config, scenario, *controller, EpisodeOptions{record_telemetry, nullptr});
}

TrainResult train(const ExperimentConfig& config, const Scenario& scenario, std::uint64_t seed) {
    validate(config);
    if (config.controller.kind != ControllerKind::Dqn) {
        throw std::invalid_argument(std::string("train: needs a dqn config, got ") + to_string(config.controller.kind));
    }
    const auto& l = config.learning;
    LearnerState learner(l, derive_seed(seed, 0));
    DqnController controller(learner.net, config.controller.duration, config.kinematics, l.count_scale,
                             derive_seed(seed, 1));
    const EpsilonSchedule schedule{l.epsilon_start, l.epsilon_end, l.train_episodes};

    TrainResult out{seed, {}, learner.net, learner.net, 0};
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t ep = 0; ep < l.train_episodes; ++ep) {
        const double eps = epsilon(schedule, ep);
        controller.set_epsilon(eps);
        const auto run = run_episode(config, scenario, controller, EpisodeOptions{false, &learner});
        if (!learner.net.all_finite()) throw std::runtime_error("train: network parameters diverged");
        const auto eval = evaluate(config, scenario, learner.net);
        out.curve.push_back({ep, eps, run.avg_travel_time, run.throughput, eval.avg_travel_time, eval.throughput,
                             run.loss_mean, run.train_steps});
        if (eval.avg_travel_time < best) {
            best = eval.avg_travel_time;
            out.best = learner.net;
            out.best_episode = ep;
        }
        spdlog::debug("{} seed {} episode {}: eps {:.3f} train att {:.2f} eval att {:.2f} loss {:.4g}", config.name,
                      seed, ep, eps, run.avg_travel_time, eval.avg_travel_time, run.loss_mean);
    }
    out.final_net = learner.net;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Reports

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MetricsReport summarize(const ExperimentConfig& config, std::vector<SeedMetrics> seeds) {
    MetricsReport r;
    r.name = config.name;
    r.controller = to_string(config.controller.kind);
    if (config.controller.kind == ControllerKind::Dqn) r.controller += std::string("/") + to_string(config.controller.reward);
    r.controller += std::string("/") + to_string(config.controller.duration.mode);
    r.fingerprint = fingerprint(config);
    std::vector<double> att, thr;
    for (const auto& s : seeds) {
        att.push_back(s.avg_travel_time);
        thr.push_back(static_cast<double>(s.throughput));
    }
    r.median_avg_travel_time = median(att);
    r.median_throughput = median(thr);
    r.seeds = std::move(seeds);
    return r;
}

json to_json(const MetricsReport& r) {
    json seeds = json::array();
    for (const auto& s : r.seeds) {
        json j{{"seed", s.seed},
               {"average_travel_time", s.avg_travel_time},
               {"throughput", s.throughput},
               {"generated", s.generated}};
        if (s.final_avg_travel_time) j["final_average_travel_time"] = *s.final_avg_travel_time;
        if (s.final_throughput) j["final_throughput"] = *s.final_throughput;
        if (s.last_train_avg_travel_time) j["last_train_average_travel_time"] = *s.last_train_avg_travel_time;
        if (s.best_episode) j["best_episode"] = *s.best_episode;
        seeds.push_back(std::move(j));
    }
    return json{{"name", r.name},
                {"controller", r.controller},
                {"config_fingerprint", r.fingerprint},
                {"median_average_travel_time", r.median_avg_travel_time},
                {"median_throughput", r.median_throughput},
                {"seeds", std::move(seeds)}};
}

void write_learning_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "episode,epsilon,train_att,train_throughput,eval_att,eval_throughput,loss_mean,train_steps\n";
    for (const auto& p : curve) {
        out << p.episode << ',' << format_number(p.epsilon) << ',' << format_number(p.train_avg_travel_time) << ','
            << p.train_throughput << ',' << format_number(p.eval_avg_travel_time) << ',' << p.eval_throughput << ','
            << format_number(p.loss_mean) << ',' << p.train_steps << '\n';
    }
}

std::string comparison_table(std::span<const MetricsReport> reports) {
    std::size_t name_w = 6, ctl_w = 10;
    for (const auto& r : reports) {
        name_w = std::max(name_w, r.name.size());
        ctl_w = std::max(ctl_w, r.controller.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_w)) << "config" << "  " << std::setw(static_cast<int>(ctl_w))
        << "controller" << "  " << std::right << std::setw(12) << "travel_time" << "  " << std::setw(10) << "throughput"
        << "  per-seed travel time\n";
    for (const auto& r : reports) {
        out << std::left << std::setw(static_cast<int>(name_w)) << r.name << "  " << std::setw(static_cast<int>(ctl_w))
            << r.controller << "  " << std::right << std::fixed << std::setprecision(2) << std::setw(12)
            << r.median_avg_travel_time << "  " << std::setprecision(0) << std::setw(10) << r.median_throughput << " ";
        out << std::setprecision(2);
        for (const auto& s : r.seeds) out << ' ' << s.avg_travel_time;
        out << '\n';
    }
    return out.str();
}

}  // namespace pdlight

#include "pdlight/flows.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pdlight {

using nlohmann::json;

std::vector<SpawnEvent> expand(const FlowSpec& flow) {
    if (!(flow.interval > 0.0)) throw std::invalid_argument("flow interval must be positive");
    if (flow.start > flow.end) throw std::invalid_argument("flow start must not exceed end");
    std::vector<SpawnEvent> out;
    for (std::size_t k = 0;; ++k) {
        const double t = flow.start + static_cast<double>(k) * flow.interval;
        if (t > flow.end) break;
        out.push_back({t, flow.route, flow.vehicle});
    }
    return out;
}

VehicleRoute straight_route(const RoadNetwork& network, RoadId entry) {
    VehicleRoute route;
    const Road* road = &network.road(entry);
    route.first_lane = road->lanes[static_cast<std::size_t>(Turn::Straight)];
    while (road->to) {
        const auto node = *road->to;
        const auto slot = movement_slot(opposite(road->heading), Turn::Straight);
        const auto& m = network.intersection(node).movements.at(slot);
        route.movements.push_back(m.id);
        road = &network.road(network.lane(m.out_lane).road);
        if (route.movements.size() > network.movement_count()) {
            throw std::logic_error("straight_route: route does not leave the network");
        }
    }
    return route;
}

VehicleRoute route_from_roads(const RoadNetwork& network, const std::vector<std::string>& roads) {
    if (roads.empty()) throw std::invalid_argument("route is empty");
    std::vector<RoadId> ids;
    for (const auto& name : roads) {
        const auto id = network.find_road(name);
        if (!id) throw std::invalid_argument("unknown road '" + name + "'");
        ids.push_back(*id);
    }
    VehicleRoute route;
    for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
        const auto& from = network.road(ids[k]);
        const auto& to = network.road(ids[k + 1]);
        if (!from.to || !to.from || *from.to != *to.from) {
            throw std::invalid_argument("roads '" + from.name + "' and '" + to.name + "' do not meet");
        }
        const auto& node = network.intersection(*from.to);
        const Movement* found = nullptr;
        for (const auto& m : node.movements) {
            if (network.lane(m.in_lane).road == from.id && network.lane(m.out_lane).road == to.id) found = &m;
        }
        if (!found) throw std::invalid_argument("no movement from '" + from.name + "' to '" + to.name + "'");
        route.movements.push_back(found->id);
    }
    if (route.movements.empty()) {
        route.first_lane = network.road(ids[0]).lanes[static_cast<std::size_t>(Turn::Straight)];
    } else {
        route.first_lane = network.movement(route.movements.front()).in_lane;
    }
    if (network.road(ids.back()).to) {
        throw std::invalid_argument("route ends on '" + roads.back() + "', which is not a boundary exit");
    }
    return route;
}

std::vector<std::string> route_road_names(const RoadNetwork& network, const VehicleRoute& route) {
    std::vector<std::string> names{network.road(network.lane(route.first_lane).road).name};
    for (auto mid : route.movements) names.push_back(network.road(network.lane(network.movement(mid).out_lane).road).name);
    return names;
}

SyntheticFlow parse_synthetic_flow(const std::string& text) {
    if (text == "syn-light") return SyntheticFlow::Light;
    if (text == "syn-heavy") return SyntheticFlow::Heavy;
    throw std::invalid_argument("unknown synthetic flow '" + text + "' (expected syn-light or syn-heavy)");
}

const char* to_string(SyntheticFlow kind) { return kind == SyntheticFlow::Light ? "syn-light" : "syn-heavy"; }

namespace {

void require_synthetic_grid(const RoadNetwork& network, double horizon) {
    const auto& g = network.grid;
    if (!g || g->rows != 3 || g->cols != 3 || g->we_length != 300.0 || g->ns_length != 300.0) {
        throw std::invalid_argument("synthetic flows need the 3x3 grid with 300 m roads");
    }
    if (network.boundary_entries.size() != 12) throw std::invalid_argument("synthetic flows need 12 boundary entries");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
}

// Events of all flows merged by time; equal times keep flow order.
std::vector<SpawnEvent> merge(const RoadNetwork& network, double horizon, const std::optional<VehicleSpec>& vehicle,
                              double (*interval_of)(Compass side, double t)) {
    std::vector<std::pair<double, std::size_t>> keys;
    std::vector<VehicleRoute> routes;
    for (std::size_t f = 0; f < network.boundary_entries.size(); ++f) {
        const auto& entry = network.boundary_entries[f];
        routes.push_back(straight_route(network, entry.road));
        for (double t = 0.0; t < horizon; t += interval_of(entry.side, t)) keys.emplace_back(t, f);
    }
    std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<SpawnEvent> out;
    out.reserve(keys.size());
    for (const auto& [t, f] : keys) out.push_back({t, routes[f], vehicle});
    return out;
}

double light_interval(Compass, double) { return 20.0; }

double heavy_interval(Compass side, double t) {
    const bool north_south = side == Compass::North || side == Compass::South;
    switch (static_cast<long>(std::floor(t / 900.0)) % 4) {
        case 1: return north_south ? 2.0 : 10.0;
        case 3: return north_south ? 10.0 : 2.0;
        default: return 10.0;
    }
}

}  // namespace

std::vector<SpawnEvent> gen_syn_light(const RoadNetwork& network, double horizon,
                                      const std::optional<VehicleSpec>& vehicle) {
    require_synthetic_grid(network, horizon);
    return merge(network, horizon, vehicle, light_interval);
}

std::vector<SpawnEvent> gen_syn_heavy(const RoadNetwork& network, double horizon,
                                      const std::optional<VehicleSpec>& vehicle) {
    require_synthetic_grid(network, horizon);
    return merge(network, horizon, vehicle, heavy_interval);
}

std::vector<SpawnEvent> generate(SyntheticFlow kind, const RoadNetwork& network, double horizon) {
    return kind == SyntheticFlow::Light ? gen_syn_light(network, horizon) : gen_syn_heavy(network, horizon);
}

namespace {

double number_field(const json& rec, const char* key, std::size_t i) {
    if (!rec.contains(key)) throw std::invalid_argument("flow record " + std::to_string(i) + ": missing '" + key + "'");
    const auto& v = rec.at(key);
    if (!v.is_number()) throw std::invalid_argument("flow record " + std::to_string(i) + ": '" + key + "' is not a number");
    return v.get<double>();
}

VehicleSpec vehicle_from_json(const json& v, std::size_t i) {
    if (!v.is_object()) throw std::invalid_argument("flow record " + std::to_string(i) + ": 'vehicle' is not an object");
    VehicleSpec spec;
    auto read = [&](const char* key, double& field) {
        if (v.contains(key)) {
            if (!v.at(key).is_number()) {
                throw std::invalid_argument("flow record " + std::to_string(i) + ": vehicle '" + key + "' is not a number");
            }
            field = v.at(key).get<double>();
        }
    };
    read("length", spec.length);
    read("minGap", spec.min_gap);
    read("maxSpeed", spec.max_speed);
    read("usualPosAcc", spec.acceleration);
    read("acceleration", spec.acceleration);
    if (!(spec.length > 0.0) || !(spec.min_gap >= 0.0) || !(spec.max_speed > 0.0) || !(spec.acceleration > 0.0)) {
        throw std::invalid_argument("flow record " + std::to_string(i) + ": vehicle attributes out of range");
    }
    return spec;
}

}  // namespace

std::vector<SpawnEvent> flows_from_json(const json& doc, const RoadNetwork& network) {
    if (doc.is_null()) return {};
    if (!doc.is_array()) throw std::invalid_argument("flow file must hold a JSON array");
    std::vector<SpawnEvent> events;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        const auto where = "flow record " + std::to_string(i) + ": ";
        if (!rec.is_object()) throw std::invalid_argument(where + "not an object");
        if (!rec.contains("route") || !rec.at("route").is_array()) throw std::invalid_argument(where + "missing 'route' array");
        std::vector<std::string> names;
        for (const auto& r : rec.at("route")) {
            if (!r.is_string()) throw std::invalid_argument(where + "route entries must be road names");
            names.push_back(r.get<std::string>());
        }
        FlowSpec flow;
        try {
            flow.route = route_from_roads(network, names);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
        flow.start = number_field(rec, "startTime", i);
        flow.end = number_field(rec, "endTime", i);
        flow.interval = number_field(rec, "interval", i);
        if (!(flow.interval > 0.0)) throw std::invalid_argument(where + "interval must be positive");
        if (flow.start < 0.0 || flow.start > flow.end) throw std::invalid_argument(where + "need 0 <= startTime <= endTime");
        if (rec.contains("vehicle")) flow.vehicle = vehicle_from_json(rec.at("vehicle"), i);
        auto expanded = expand(flow);
        events.insert(events.end(), std::make_move_iterator(expanded.begin()), std::make_move_iterator(expanded.end()));
    }
    std::stable_sort(events.begin(), events.end(), [](const SpawnEvent& a, const SpawnEvent& b) { return a.time < b.time; });
    return events;
}

std::vector<SpawnEvent> load_flow_file(const std::filesystem::path& path, const RoadNetwork& network) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open flow file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    try {
        return flows_from_json(doc, network);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

namespace {

json vehicle_to_json(const VehicleSpec& v) {
    return json{{"length", v.length},  {"width", 2.0},        {"minGap", v.min_gap},
                {"maxSpeed", v.max_speed}, {"acceleration", v.acceleration}, {"usualPosAcc", v.acceleration}};
}

}  // namespace

json flows_to_json(const std::vector<SpawnEvent>& events, const RoadNetwork& network) {
    // Group by (route, vehicle) in order of first appearance, then cut each group into runs
    // that reproduce exactly under start + k * interval.
    std::vector<std::vector<double>> times;
    std::vector<const SpawnEvent*> heads;
    for (const auto& e : events) {
        auto it = std::find_if(heads.begin(), heads.end(),
                               [&](const SpawnEvent* h) { return h->route == e.route && h->vehicle == e.vehicle; });
        if (it == heads.end()) {
            heads.push_back(&e);
            times.emplace_back();
            it = heads.end() - 1;
        }
        times[static_cast<std::size_t>(it - heads.begin())].push_back(e.time);
    }
    json out = json::array();
    for (std::size_t g = 0; g < heads.size(); ++g) {
        const auto route = route_road_names(network, heads[g]->route);
        const auto& ts = times[g];
        std::size_t i = 0;
        while (i < ts.size()) {
            const double start = ts[i];
            double interval = 1.0;
            std::size_t j = i + 1;
            if (j < ts.size() && ts[j] > start) {
                interval = ts[j] - start;
                while (j < ts.size() && ts[j] == start + static_cast<double>(j - i) * interval) ++j;
            }
            json rec;
            if (heads[g]->vehicle) rec["vehicle"] = vehicle_to_json(*heads[g]->vehicle);
            rec["route"] = route;
            rec["interval"] = interval;
            rec["startTime"] = start;
            rec["endTime"] = ts[j - 1];
            out.push_back(std::move(rec));
            i = j;
        }
    }
    return out;
}

void save_flow_file(const std::vector<SpawnEvent>& events, const RoadNetwork& network,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write flow file " + path.string());
    out << flows_to_json(events, network).dump(2) << '\n';
}

ArrivalIntervals arrival_interval_stats(const std::vector<SpawnEvent>& events, LaneId lane) {
    std::vector<double> arrivals;
    for (const auto& e : events) {
        if (e.route.first_lane == lane) arrivals.push_back(e.time);
    }
    std::stable_sort(arrivals.begin(), arrivals.end());
    ArrivalIntervals out;
    for (std::size_t k = 0; k + 1 < arrivals.size(); ++k) out.series.emplace_back(arrivals[k], arrivals[k + 1] - arrivals[k]);
    if (!out.series.empty()) {
        double total = 0.0;
        for (const auto& [t, gap] : out.series) total += gap;
        out.mean_gap = total / static_cast<double>(out.series.size());
    }
    return out;
}

}  // namespace pdlight

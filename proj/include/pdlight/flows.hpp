#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pdlight/engine.hpp"
#include "pdlight/netmodel.hpp"

namespace pdlight {

// One repeating vehicle stream: a vehicle at start, start + interval, ... while <= end.
struct FlowSpec {
    VehicleRoute route;
    double start = 0.0;
    double end = 0.0;
    double interval = 1.0;
    std::optional<VehicleSpec> vehicle;
};

std::vector<SpawnEvent> expand(const FlowSpec& flow);

// Route that enters on `entry` (its straight lane) and goes straight until it leaves the network.
VehicleRoute straight_route(const RoadNetwork& network, RoadId entry);

// Route along named roads; consecutive roads must meet at an intersection.
VehicleRoute route_from_roads(const RoadNetwork& network, const std::vector<std::string>& roads);
std::vector<std::string> route_road_names(const RoadNetwork& network, const VehicleRoute& route);

enum class SyntheticFlow { Light, Heavy };
SyntheticFlow parse_synthetic_flow(const std::string& text);  // "syn-light" | "syn-heavy"
const char* to_string(SyntheticFlow kind);

// 12 straight flows, one per boundary entry, one vehicle every 20 s from t = 0.
std::vector<SpawnEvent> gen_syn_light(const RoadNetwork& network, double horizon = 3600.0,
                                      const std::optional<VehicleSpec>& vehicle = VehicleSpec{});

// Same flows in 900 s periods: all at 10 s; N-S pair at 2 s; all at 10 s; W-E pair at 2 s.
std::vector<SpawnEvent> gen_syn_heavy(const RoadNetwork& network, double horizon = 3600.0,
                                      const std::optional<VehicleSpec>& vehicle = VehicleSpec{});

std::vector<SpawnEvent> generate(SyntheticFlow kind, const RoadNetwork& network, double horizon = 3600.0);

// Flow files are JSON arrays of {vehicle, route, interval, startTime, endTime}.
// Events come back sorted by time, ties in record order.
std::vector<SpawnEvent> flows_from_json(const nlohmann::json& doc, const RoadNetwork& network);
std::vector<SpawnEvent> load_flow_file(const std::filesystem::path& path, const RoadNetwork& network);

// Packs consecutive events of the same route and vehicle into evenly spaced records.
// Reloading a time-sorted list gives the same list back.
nlohmann::json flows_to_json(const std::vector<SpawnEvent>& events, const RoadNetwork& network);
void save_flow_file(const std::vector<SpawnEvent>& events, const RoadNetwork& network,
                    const std::filesystem::path& path);

struct ArrivalIntervals {
    std::vector<std::pair<double, double>> series;  // (earlier arrival, gap to the next)
    std::optional<double> mean_gap;
};

ArrivalIntervals arrival_interval_stats(const std::vector<SpawnEvent>& events, LaneId lane);

}  // namespace pdlight

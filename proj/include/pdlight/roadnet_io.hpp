#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "pdlight/netmodel.hpp"

namespace pdlight {

// CityFlow-compatible roadnet subset.
//
// intersections: [{id, point: {x, y}, virtual}]
// roads: [{id, startIntersection, endIntersection, points | length, lanes: [{maxSpeed}] x3}]
//
// Non-virtual intersections become controlled nodes and need one incoming and one outgoing
// 3-lane road per compass side. Road headings come from the endpoint geometry. Unknown
// fields are ignored with a single warning per file.
RoadNetwork roadnet_from_json(const nlohmann::json& doc, const VehicleGeometry& vehicle);
RoadNetwork load_roadnet(const std::filesystem::path& path, const VehicleGeometry& vehicle);

nlohmann::json roadnet_to_json(const RoadNetwork& network);
void save_roadnet(const RoadNetwork& network, const std::filesystem::path& path);

}  // namespace pdlight

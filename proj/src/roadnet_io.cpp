#include "pdlight/roadnet_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace pdlight {

using nlohmann::json;

namespace {

struct NodeRecord {
    std::string name;
    double x = 0.0;
    double y = 0.0;
    bool is_virtual = false;
};

void collect_unknown(const json& obj, std::initializer_list<const char*> known, const char* where,
                     std::set<std::string>& unknown) {
    if (!obj.is_object()) return;
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
            unknown.insert(std::string(where) + "." + key);
        }
    }
}

Compass heading_between(double dx, double dy) {
    if (std::abs(dx) >= std::abs(dy)) return dx >= 0.0 ? Compass::East : Compass::West;
    return dy >= 0.0 ? Compass::North : Compass::South;
}

double point_distance(const json& a, const json& b) {
    return std::hypot(b.at("x").get<double>() - a.at("x").get<double>(),
                      b.at("y").get<double>() - a.at("y").get<double>());
}

}  // namespace

RoadNetwork roadnet_from_json(const json& doc, const VehicleGeometry& vehicle) {
    if (!doc.is_object() || !doc.contains("intersections") || !doc.contains("roads")) {
        throw std::runtime_error("roadnet: expected an object with 'intersections' and 'roads'");
    }
    std::set<std::string> unknown;
    collect_unknown(doc, {"intersections", "roads"}, "roadnet", unknown);

    std::map<std::string, NodeRecord> nodes;
    for (const auto& item : doc.at("intersections")) {
        collect_unknown(item, {"id", "point", "virtual", "roads"}, "intersection", unknown);
        NodeRecord rec;
        rec.name = item.at("id").get<std::string>();
        rec.x = item.at("point").at("x").get<double>();
        rec.y = item.at("point").at("y").get<double>();
        rec.is_virtual = item.value("virtual", false);
        if (!nodes.emplace(rec.name, rec).second) throw std::runtime_error("roadnet: duplicate intersection " + rec.name);
    }

    RoadNetwork net;
    std::vector<const NodeRecord*> controlled;
    for (const auto& [_, rec] : nodes) {
        if (!rec.is_virtual) controlled.push_back(&rec);
    }
    // Row-major from the south-west corner, matching build_grid.
    std::stable_sort(controlled.begin(), controlled.end(), [](const NodeRecord* a, const NodeRecord* b) {
        return a->y != b->y ? a->y < b->y : a->x < b->x;
    });
    std::map<std::string, IntersectionId> ids;
    for (const NodeRecord* rec : controlled) {
        Intersection node;
        node.id = static_cast<IntersectionId>(net.intersections.size());
        node.name = rec->name;
        node.x = rec->x;
        node.y = rec->y;
        ids.emplace(rec->name, node.id);
        net.intersections.push_back(std::move(node));
    }

    for (const auto& item : doc.at("roads")) {
        collect_unknown(item, {"id", "startIntersection", "endIntersection", "from", "to", "points", "length", "lanes",
                               "maxSpeed"},
                        "road", unknown);
        const auto name = item.at("id").get<std::string>();
        const auto start_name = item.contains("startIntersection") ? item.at("startIntersection").get<std::string>()
                                                                   : item.at("from").get<std::string>();
        const auto end_name = item.contains("endIntersection") ? item.at("endIntersection").get<std::string>()
                                                               : item.at("to").get<std::string>();
        const auto s = nodes.find(start_name);
        const auto e = nodes.find(end_name);
        if (s == nodes.end() || e == nodes.end()) {
            throw std::runtime_error("roadnet: road " + name + " references unknown intersection");
        }
        if (s->second.is_virtual && e->second.is_virtual) {
            spdlog::warn("roadnet: skipping road {} between two virtual intersections", name);
            continue;
        }

        double length = 0.0;
        if (item.contains("length")) {
            length = item.at("length").get<double>();
        } else if (item.contains("points") && item.at("points").size() >= 2) {
            const auto& pts = item.at("points");
            for (std::size_t k = 1; k < pts.size(); ++k) length += point_distance(pts[k - 1], pts[k]);
        } else {
            length = std::hypot(e->second.x - s->second.x, e->second.y - s->second.y);
        }

        std::size_t lane_count = 0;
        double max_speed = item.value("maxSpeed", 0.0);
        const auto& lanes = item.at("lanes");
        if (lanes.is_array()) {
            lane_count = lanes.size();
            for (const auto& l : lanes) collect_unknown(l, {"maxSpeed", "width"}, "lane", unknown);
            if (lane_count > 0 && lanes[0].contains("maxSpeed")) max_speed = lanes[0].at("maxSpeed").get<double>();
        } else {
            lane_count = lanes.get<std::size_t>();
        }
        if (lane_count != kLanesPerRoad) {
            throw std::runtime_error("roadnet: road " + name + " has " + std::to_string(lane_count) +
                                     " lanes, expected 3 (left, straight, right)");
        }
        if (!(max_speed > 0.0)) throw std::runtime_error("roadnet: road " + name + " has no positive maxSpeed");
        if (!(length > 0.0)) throw std::runtime_error("roadnet: road " + name + " has non-positive length");

        Road road;
        road.id = static_cast<RoadId>(net.roads.size());
        road.name = name;
        if (!s->second.is_virtual) road.from = ids.at(start_name);
        if (!e->second.is_virtual) road.to = ids.at(end_name);
        road.heading = heading_between(e->second.x - s->second.x, e->second.y - s->second.y);
        road.length = length;
        const auto capacity = lane_capacity(length, vehicle.length, vehicle.min_gap);
        for (std::size_t k = 0; k < kLanesPerRoad; ++k) {
            Lane lane;
            lane.id = static_cast<LaneId>(net.lanes.size());
            lane.name = name + "_" + std::to_string(k);
            lane.road = road.id;
            lane.slot = static_cast<Turn>(k);
            lane.length = length;
            lane.max_speed = max_speed;
            lane.capacity = capacity;
            road.lanes[k] = lane.id;
            net.lanes.push_back(std::move(lane));
        }
        net.roads.push_back(std::move(road));
    }

    if (!unknown.empty()) {
        std::string list;
        for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
        spdlog::warn("roadnet: ignoring unsupported fields: {}", list);
    }

    finalize_topology(net);

    // Recognise a full rectangular lattice with uniform WE / NS lengths.
    std::set<double> xs;
    std::set<double> ys;
    for (const auto& n : net.intersections) {
        xs.insert(n.x);
        ys.insert(n.y);
    }
    if (!net.intersections.empty() && xs.size() * ys.size() == net.intersections.size()) {
        std::set<double> we;
        std::set<double> ns;
        for (const auto& r : net.roads) {
            (r.heading == Compass::East || r.heading == Compass::West ? we : ns).insert(r.length);
        }
        if (we.size() == 1 && ns.size() == 1) {
            net.grid = GridShape{ys.size(), xs.size(), *we.begin(), *ns.begin()};
        }
    }
    return net;
}

RoadNetwork load_roadnet(const std::filesystem::path& path, const VehicleGeometry& vehicle) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open roadnet file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("roadnet " + path.string() + ": " + e.what());
    }
    return roadnet_from_json(doc, vehicle);
}

json roadnet_to_json(const RoadNetwork& net) {
    json intersections = json::array();
    json roads = json::array();
    std::vector<std::vector<std::string>> node_roads(net.intersections.size());

    // Virtual endpoints are synthesised one road-length beyond the controlled node.
    struct Virtual {
        std::string name;
        double x;
        double y;
        std::vector<std::string> roads;
    };
    std::vector<Virtual> virtuals;
    auto virtual_name = [&](double x, double y, const std::string& road) {
        if (net.grid) {
            const auto gx = static_cast<long>(std::lround(x / net.grid->we_length));
            const auto gy = static_cast<long>(std::lround(y / net.grid->ns_length));
            return "intersection_" + std::to_string(gx) + "_" + std::to_string(gy);
        }
        return "virtual_" + road;
    };
    auto add_virtual = [&](double x, double y, const std::string& road) {
        const auto name = virtual_name(x, y, road);
        for (auto& v : virtuals) {
            if (v.name == name) {
                v.roads.push_back(road);
                return name;
            }
        }
        virtuals.push_back({name, x, y, {road}});
        return name;
    };
    auto step = [](Compass h) -> std::pair<double, double> {
        switch (h) {
            case Compass::East: return {1.0, 0.0};
            case Compass::West: return {-1.0, 0.0};
            case Compass::North: return {0.0, 1.0};
            case Compass::South: return {0.0, -1.0};
        }
        return {0.0, 0.0};
    };

    for (const auto& road : net.roads) {
        const auto [dx, dy] = step(road.heading);
        double sx = 0.0;
        double sy = 0.0;
        double ex = 0.0;
        double ey = 0.0;
        std::string start;
        std::string end;
        if (road.from) {
            const auto& n = net.intersection(*road.from);
            sx = n.x;
            sy = n.y;
            start = n.name;
            node_roads[index(n.id)].push_back(road.name);
        }
        if (road.to) {
            const auto& n = net.intersection(*road.to);
            ex = n.x;
            ey = n.y;
            end = n.name;
            node_roads[index(n.id)].push_back(road.name);
        }
        if (!road.from) {
            sx = ex - dx * road.length;
            sy = ey - dy * road.length;
            start = add_virtual(sx, sy, road.name);
        }
        if (!road.to) {
            ex = sx + dx * road.length;
            ey = sy + dy * road.length;
            end = add_virtual(ex, ey, road.name);
        }
        json lanes = json::array();
        for (LaneId id : road.lanes) lanes.push_back({{"width", 3.0}, {"maxSpeed", net.lane(id).max_speed}});
        roads.push_back({{"id", road.name},
                         {"startIntersection", start},
                         {"endIntersection", end},
                         {"points", json::array({{{"x", sx}, {"y", sy}}, {{"x", ex}, {"y", ey}}})},
                         {"length", road.length},
                         {"lanes", lanes}});
    }

    for (const auto& n : net.intersections) {
        intersections.push_back({{"id", n.name},
                                 {"point", {{"x", n.x}, {"y", n.y}}},
                                 {"virtual", false},
                                 {"roads", node_roads[index(n.id)]}});
    }
    for (const auto& v : virtuals) {
        intersections.push_back(
            {{"id", v.name}, {"point", {{"x", v.x}, {"y", v.y}}}, {"virtual", true}, {"roads", v.roads}});
    }
    return {{"intersections", intersections}, {"roads", roads}};
}

void save_roadnet(const RoadNetwork& network, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write roadnet file " + path.string());
    out << roadnet_to_json(network).dump(2) << '\n';
}

}  // namespace pdlight

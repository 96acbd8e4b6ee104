#include "pdlight/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdlight {

const char* to_string(Compass c) {
    switch (c) {
        case Compass::West: return "W";
        case Compass::East: return "E";
        case Compass::North: return "N";
        case Compass::South: return "S";
    }
    return "?";
}

const char* to_string(Turn t) {
    switch (t) {
        case Turn::Left: return "left";
        case Turn::Straight: return "straight";
        case Turn::Right: return "right";
    }
    return "?";
}

Compass opposite(Compass c) {
    switch (c) {
        case Compass::West: return Compass::East;
        case Compass::East: return Compass::West;
        case Compass::North: return Compass::South;
        case Compass::South: return Compass::North;
    }
    return c;
}

Compass exit_side(Compass approach, Turn turn) {
    // Vehicles arriving from `approach` travel towards opposite(approach).
    static constexpr Compass table[4][3] = {
        /* W */ {Compass::North, Compass::East, Compass::South},
        /* E */ {Compass::South, Compass::West, Compass::North},
        /* N */ {Compass::East, Compass::South, Compass::West},
        /* S */ {Compass::West, Compass::North, Compass::East},
    };
    return table[static_cast<int>(approach)][static_cast<int>(turn)];
}

const Movement& RoadNetwork::movement(MovementId id) const {
    const auto& node = intersections.at(index(movement_intersection(id)));
    return node.movements.at(movement_slot_of(id));
}

std::optional<RoadId> RoadNetwork::find_road(const std::string& name) const {
    for (const auto& r : roads) {
        if (r.name == name) return r.id;
    }
    return std::nullopt;
}

std::optional<IntersectionId> RoadNetwork::find_intersection(const std::string& name) const {
    for (const auto& n : intersections) {
        if (n.name == name) return n.id;
    }
    return std::nullopt;
}

std::int32_t lane_capacity(double length, double vehicle_length, double min_gap) {
    if (!(length > 0.0) || !(vehicle_length + min_gap > 0.0) || vehicle_length < 0.0 || min_gap < 0.0) {
        throw std::domain_error("lane_capacity: length and vehicle spacing must be positive");
    }
    return static_cast<std::int32_t>(std::floor(length / (vehicle_length + min_gap)));
}

std::vector<Phase> standard_phase_table() {
    return {
        Phase{0, {movement_slot(Compass::West, Turn::Straight), movement_slot(Compass::East, Turn::Straight)}},
        Phase{1, {movement_slot(Compass::North, Turn::Straight), movement_slot(Compass::South, Turn::Straight)}},
        Phase{2, {movement_slot(Compass::West, Turn::Left), movement_slot(Compass::East, Turn::Left)}},
        Phase{3, {movement_slot(Compass::North, Turn::Left), movement_slot(Compass::South, Turn::Left)}},
    };
}

bool movements_conflict(std::size_t slot_a, std::size_t slot_b) {
    const Compass a = slot_approach(slot_a);
    const Compass b = slot_approach(slot_b);
    if (a == b) return false;
    if (slot_turn(slot_a) == Turn::Right || slot_turn(slot_b) == Turn::Right) return false;
    return !(opposite(a) == b && slot_turn(slot_a) == slot_turn(slot_b));
}

namespace {

// CityFlow heading codes used in road names: 0 east, 1 north, 2 west, 3 south.
int heading_code(Compass h) {
    switch (h) {
        case Compass::East: return 0;
        case Compass::North: return 1;
        case Compass::West: return 2;
        case Compass::South: return 3;
    }
    return 0;
}

struct GridBuilder {
    const GridParams& p;
    RoadNetwork net;

    explicit GridBuilder(const GridParams& params) : p(params) {}

    std::optional<IntersectionId> node_at(long x, long y) const {
        if (x < 1 || y < 1 || x > static_cast<long>(p.cols) || y > static_cast<long>(p.rows)) return std::nullopt;
        return static_cast<IntersectionId>((y - 1) * static_cast<long>(p.cols) + (x - 1));
    }

    RoadId add_road(long x, long y, Compass heading) {
        const double length = (heading == Compass::East || heading == Compass::West) ? p.we_length : p.ns_length;
        Road road;
        road.id = static_cast<RoadId>(net.roads.size());
        road.name = "road_" + std::to_string(x) + "_" + std::to_string(y) + "_" + std::to_string(heading_code(heading));
        road.from = node_at(x, y);
        long dx = 0;
        long dy = 0;
        switch (heading) {
            case Compass::East: dx = 1; break;
            case Compass::West: dx = -1; break;
            case Compass::North: dy = 1; break;
            case Compass::South: dy = -1; break;
        }
        road.to = node_at(x + dx, y + dy);
        road.heading = heading;
        road.length = length;
        const auto capacity = lane_capacity(length, p.vehicle.length, p.vehicle.min_gap);
        for (std::size_t k = 0; k < kLanesPerRoad; ++k) {
            Lane lane;
            lane.id = static_cast<LaneId>(net.lanes.size());
            lane.name = road.name + "_" + std::to_string(k);
            lane.road = road.id;
            lane.slot = static_cast<Turn>(k);
            lane.length = length;
            lane.max_speed = p.max_speed;
            lane.capacity = capacity;
            road.lanes[k] = lane.id;
            net.lanes.push_back(std::move(lane));
        }
        net.roads.push_back(road);
        return road.id;
    }
};

}  // namespace

void finalize_topology(RoadNetwork& net) {
    const std::size_t count = net.intersections.size();
    std::vector<std::array<std::optional<RoadId>, kApproaches>> incoming(count);
    std::vector<std::array<std::optional<RoadId>, kApproaches>> outgoing(count);
    net.boundary_exits.clear();
    net.boundary_entries.clear();
    for (const auto& road : net.roads) {
        if (!road.from && road.to) net.boundary_entries.push_back({road.id, opposite(road.heading)});
        if (road.from) {
            auto& slot = outgoing.at(index(*road.from))[static_cast<int>(road.heading)];
            if (slot) throw std::invalid_argument("road " + road.name + ": two outgoing roads share a side");
            slot = road.id;
        }
        if (road.to) {
            auto& slot = incoming.at(index(*road.to))[static_cast<int>(opposite(road.heading))];
            if (slot) throw std::invalid_argument("road " + road.name + ": two incoming roads share an approach");
            slot = road.id;
        } else {
            for (LaneId lane : road.lanes) net.boundary_exits.push_back(lane);
        }
    }

    for (auto& node : net.intersections) {
        const auto i = index(node.id);
        for (std::size_t s = 0; s < kApproaches; ++s) {
            const char* side = to_string(static_cast<Compass>(s));
            if (!incoming[i][s]) throw std::invalid_argument(node.name + ": no incoming road on side " + side);
            if (!outgoing[i][s]) throw std::invalid_argument(node.name + ": no outgoing road on side " + side);
        }
        node.movements.assign(kMovementsPerIntersection, Movement{});
        for (std::size_t slot = 0; slot < kMovementsPerIntersection; ++slot) {
            const Compass approach = slot_approach(slot);
            const Turn turn = slot_turn(slot);
            const Road& in = net.roads[index(*incoming[i][static_cast<int>(approach)])];
            const Road& out = net.roads[index(*outgoing[i][static_cast<int>(exit_side(approach, turn))])];
            Movement m;
            m.id = make_movement_id(node.id, slot);
            m.in_lane = in.lanes[static_cast<int>(turn)];
            m.out_lane = out.lanes[static_cast<int>(turn)];
            m.turn = turn;
            node.movements[slot] = m;
            node.incoming_lanes[slot] = m.in_lane;
        }
        for (std::size_t s = 0; s < kApproaches; ++s) {
            const Road& out = net.roads[index(*outgoing[i][s])];
            for (std::size_t k = 0; k < kLanesPerRoad; ++k) node.outgoing_lanes[s * kLanesPerRoad + k] = out.lanes[k];
        }
        node.phases = standard_phase_table();
        node.always_green.clear();
        for (Compass a : {Compass::West, Compass::East, Compass::North, Compass::South}) {
            node.always_green.push_back(movement_slot(a, Turn::Right));
        }
    }
}

RoadNetwork build_grid(const GridParams& p) {
    if (p.rows < 1 || p.cols < 1) throw std::invalid_argument("build_grid: rows and cols must be >= 1");
    if (!(p.we_length > 0.0) || !(p.ns_length > 0.0)) {
        throw std::invalid_argument("build_grid: lane lengths must be positive");
    }
    if (!(p.max_speed > 0.0)) throw std::invalid_argument("build_grid: max_speed must be positive");
    if (lane_capacity(std::min(p.we_length, p.ns_length), p.vehicle.length, p.vehicle.min_gap) < 1) {
        throw std::invalid_argument("build_grid: lanes too short to hold one vehicle");
    }

    GridBuilder b(p);
    for (std::size_t y = 1; y <= p.rows; ++y) {
        for (std::size_t x = 1; x <= p.cols; ++x) {
            Intersection node;
            node.id = static_cast<IntersectionId>(b.net.intersections.size());
            node.name = "intersection_" + std::to_string(x) + "_" + std::to_string(y);
            node.x = static_cast<double>(x) * p.we_length;
            node.y = static_cast<double>(y) * p.ns_length;
            b.net.intersections.push_back(std::move(node));
        }
    }

    const long rows = static_cast<long>(p.rows);
    const long cols = static_cast<long>(p.cols);
    for (long y = 1; y <= rows; ++y) {
        for (long x = 1; x <= cols; ++x) {
            for (Compass h : {Compass::East, Compass::North, Compass::West, Compass::South}) b.add_road(x, y, h);
        }
    }
    for (long y = 1; y <= rows; ++y) {
        b.add_road(0, y, Compass::East);
    }
    for (long y = 1; y <= rows; ++y) {
        b.add_road(cols + 1, y, Compass::West);
    }
    for (long x = 1; x <= cols; ++x) {
        b.add_road(x, rows + 1, Compass::South);
    }
    for (long x = 1; x <= cols; ++x) {
        b.add_road(x, 0, Compass::North);
    }

    finalize_topology(b.net);
    b.net.grid = GridShape{p.rows, p.cols, p.we_length, p.ns_length};
    return std::move(b.net);
}

std::vector<Violation> validate(const RoadNetwork& net) {
    std::vector<Violation> out;
    auto report = [&](ViolationKind kind, std::string message) { out.push_back({kind, std::move(message)}); };
    const std::size_t lane_count = net.lanes.size();
    auto lane_ok = [&](LaneId id) { return index(id) < lane_count; };

    for (const auto& lane : net.lanes) {
        if (!(lane.length > 0.0) || lane.capacity < 1 || !(lane.max_speed > 0.0)) {
            report(ViolationKind::LaneGeometry, "lane " + lane.name + ": non-positive length, speed or capacity");
        }
    }

    std::vector<int> as_in(lane_count, 0);
    std::vector<int> as_out(lane_count, 0);

    for (const auto& node : net.intersections) {
        const std::string where = "intersection " + node.name + ": ";
        if (node.movements.size() != kMovementsPerIntersection) {
            report(ViolationKind::MovementCount, where + "movement count != 12");
        }
        for (std::size_t slot = 0; slot < node.movements.size(); ++slot) {
            const auto& m = node.movements[slot];
            if (!lane_ok(m.in_lane) || !lane_ok(m.out_lane)) {
                report(ViolationKind::DanglingLane, where + "dangling lane reference in movement " + std::to_string(slot));
                continue;
            }
            ++as_in[index(m.in_lane)];
            ++as_out[index(m.out_lane)];
            if (m.in_lane == m.out_lane) {
                report(ViolationKind::LaneWiring, where + "movement " + std::to_string(slot) + " loops onto its own lane");
            }
            if (slot < kMovementsPerIntersection && m.turn != slot_turn(slot)) {
                report(ViolationKind::LaneWiring, where + "movement " + std::to_string(slot) + " turn does not match slot");
            }
            if (slot < kMovementsPerIntersection && node.incoming_lanes[slot] != m.in_lane) {
                report(ViolationKind::LaneWiring, where + "incoming lane order disagrees with movement " + std::to_string(slot));
            }
            for (std::size_t other = 0; other < slot; ++other) {
                const auto& o = node.movements[other];
                if (o.in_lane == m.in_lane && o.turn == m.turn) {
                    report(ViolationKind::DuplicateMovement, where + "duplicate (in_lane, turn) pair");
                }
            }
        }

        if (node.phases.size() != kPhases) {
            report(ViolationKind::PhaseCount, where + "phase count != 4");
        }
        std::vector<int> covered(kMovementsPerIntersection, 0);
        for (const auto& phase : node.phases) {
            if (phase.movements.size() != 2) {
                report(ViolationKind::PhaseComposition, where + "phase " + std::to_string(phase.id) + " must hold 2 movements");
            }
            for (std::size_t slot : phase.movements) {
                if (slot >= kMovementsPerIntersection) {
                    report(ViolationKind::PhaseComposition, where + "phase references unknown movement");
                    continue;
                }
                if (slot_turn(slot) == Turn::Right) {
                    report(ViolationKind::PhaseComposition, where + "phase " + std::to_string(phase.id) + " lists a right turn");
                }
                ++covered[slot];
            }
            if (phase.movements.size() == 2 && phase.movements[0] < kMovementsPerIntersection &&
                phase.movements[1] < kMovementsPerIntersection &&
                movements_conflict(phase.movements[0], phase.movements[1])) {
                report(ViolationKind::PhaseComposition, where + "phase " + std::to_string(phase.id) + " combines conflicting movements");
            }
        }
        for (std::size_t slot = 0; slot < kMovementsPerIntersection; ++slot) {
            if (slot_turn(slot) == Turn::Right) continue;
            if (covered[slot] != 1) {
                report(ViolationKind::PhaseCoverage, where + "movement " + std::to_string(slot) + " served by " +
                                                         std::to_string(covered[slot]) + " phases");
            }
        }

        auto green = node.always_green;
        std::sort(green.begin(), green.end());
        const std::vector<std::size_t> rights = {2, 5, 8, 11};
        if (green != rights) report(ViolationKind::AlwaysGreen, where + "always-green set must be exactly the right turns");
    }

    for (const auto& road : net.roads) {
        for (LaneId id : road.lanes) {
            if (!lane_ok(id)) {
                report(ViolationKind::DanglingLane, "road " + road.name + ": dangling lane reference");
                continue;
            }
            const auto i = index(id);
            const std::string& name = net.lanes[i].name;
            if (road.to && as_in[i] != 1) {
                report(ViolationKind::LaneWiring, "lane " + name + " feeds " + std::to_string(as_in[i]) + " movements");
            }
            if (road.from && as_out[i] != 1) {
                report(ViolationKind::LaneWiring, "lane " + name + " is fed by " + std::to_string(as_out[i]) + " movements");
            }
        }
    }
    for (const auto& e : net.boundary_entries) {
        if (index(e.road) >= net.roads.size()) report(ViolationKind::DanglingLane, "dangling boundary entry road");
    }
    for (LaneId id : net.boundary_exits) {
        if (!lane_ok(id)) report(ViolationKind::DanglingLane, "dangling boundary exit lane");
    }
    return out;
}

}  // namespace pdlight

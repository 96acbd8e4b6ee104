#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pdlight {

// Strong index types. Each is an offset into the owning registry of RoadNetwork.
enum class LaneId : std::uint32_t {};
enum class RoadId : std::uint32_t {};
enum class IntersectionId : std::uint32_t {};
// Global movement id: intersection index * 12 + movement slot.
enum class MovementId : std::uint32_t {};

constexpr std::size_t index(LaneId id) { return static_cast<std::size_t>(id); }
constexpr std::size_t index(RoadId id) { return static_cast<std::size_t>(id); }
constexpr std::size_t index(IntersectionId id) { return static_cast<std::size_t>(id); }
constexpr std::size_t index(MovementId id) { return static_cast<std::size_t>(id); }

enum class Compass : std::uint8_t { West = 0, East = 1, North = 2, South = 3 };
enum class Turn : std::uint8_t { Left = 0, Straight = 1, Right = 2 };

inline constexpr std::size_t kApproaches = 4;
inline constexpr std::size_t kTurns = 3;
inline constexpr std::size_t kMovementsPerIntersection = kApproaches * kTurns;
inline constexpr std::size_t kPhases = 4;
inline constexpr std::size_t kLanesPerRoad = 3;

const char* to_string(Compass c);
const char* to_string(Turn t);

// Canonical slot of an incoming lane / movement: approach-major (W,E,N,S), then turn (left,straight,right).
constexpr std::size_t movement_slot(Compass approach, Turn turn) {
    return static_cast<std::size_t>(approach) * kTurns + static_cast<std::size_t>(turn);
}
constexpr Compass slot_approach(std::size_t slot) { return static_cast<Compass>(slot / kTurns); }
constexpr Turn slot_turn(std::size_t slot) { return static_cast<Turn>(slot % kTurns); }

// Side of the intersection a vehicle leaves through, given the side it arrived from and its turn.
Compass exit_side(Compass approach, Turn turn);
Compass opposite(Compass c);

struct Lane {
    LaneId id{};
    std::string name;
    RoadId road{};
    Turn slot = Turn::Straight;  // lane k of a road serves turn k at the downstream intersection
    double length = 0.0;
    double max_speed = 0.0;
    std::int32_t capacity = 0;
};

struct Road {
    RoadId id{};
    std::string name;
    std::optional<IntersectionId> from;  // nullopt: enters from outside the network
    std::optional<IntersectionId> to;    // nullopt: leaves the network
    Compass heading = Compass::East;     // direction of travel
    double length = 0.0;
    std::array<LaneId, kLanesPerRoad> lanes{};
};

struct Movement {
    MovementId id{};
    LaneId in_lane{};
    LaneId out_lane{};
    Turn turn = Turn::Straight;
};

struct Phase {
    std::uint32_t id = 0;
    std::vector<std::size_t> movements;  // slots into Intersection::movements
};

struct Intersection {
    IntersectionId id{};
    std::string name;
    double x = 0.0;
    double y = 0.0;
    std::array<LaneId, kMovementsPerIntersection> incoming_lanes{};
    std::array<LaneId, kMovementsPerIntersection> outgoing_lanes{};  // exit side (W,E,N,S) x lane slot
    std::vector<Movement> movements;                                 // indexed by canonical slot
    std::vector<Phase> phases;
    std::vector<std::size_t> always_green;                           // right-turn slots
};

struct BoundaryEntry {
    RoadId road{};
    Compass side = Compass::West;  // side of the network the road enters from
};

struct GridShape {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double we_length = 0.0;
    double ns_length = 0.0;
};

// Static topology. Plain aggregate so that tests can build malformed networks;
// validate() is the gate before simulation.
struct RoadNetwork {
    std::vector<Intersection> intersections;
    std::vector<Road> roads;
    std::vector<Lane> lanes;
    std::vector<BoundaryEntry> boundary_entries;
    std::vector<LaneId> boundary_exits;
    std::optional<GridShape> grid;  // set when produced by build_grid

    const Lane& lane(LaneId id) const { return lanes.at(index(id)); }
    const Road& road(RoadId id) const { return roads.at(index(id)); }
    const Intersection& intersection(IntersectionId id) const { return intersections.at(index(id)); }
    const Movement& movement(MovementId id) const;
    std::optional<RoadId> find_road(const std::string& name) const;
    std::optional<IntersectionId> find_intersection(const std::string& name) const;
    std::size_t movement_count() const { return intersections.size() * kMovementsPerIntersection; }
};

constexpr MovementId make_movement_id(IntersectionId node, std::size_t slot) {
    return static_cast<MovementId>(index(node) * kMovementsPerIntersection + slot);
}
constexpr IntersectionId movement_intersection(MovementId id) {
    return static_cast<IntersectionId>(index(id) / kMovementsPerIntersection);
}
constexpr std::size_t movement_slot_of(MovementId id) { return index(id) % kMovementsPerIntersection; }

struct VehicleGeometry {
    double length = 5.0;   // l_v
    double min_gap = 2.5;  // l_g
};

// N_max = floor(length / (l_v + l_g)). Throws std::domain_error on non-positive inputs.
std::int32_t lane_capacity(double length, double vehicle_length, double min_gap);

// Phase 0: W/E straight, 1: N/S straight, 2: W/E left, 3: N/S left. Right turns are never listed.
std::vector<Phase> standard_phase_table();

// Two non-right movements may share a green when they come from the same approach,
// or from opposite approaches with the same turn.
bool movements_conflict(std::size_t slot_a, std::size_t slot_b);

struct GridParams {
    std::size_t rows = 3;
    std::size_t cols = 3;
    double we_length = 300.0;
    double ns_length = 300.0;
    VehicleGeometry vehicle{};
    double max_speed = 40.0 / 3.6;
};

RoadNetwork build_grid(const GridParams& params);

// Derives movements, phases, always-green sets and boundary lists from the road registry
// (from/to/heading of every road). Throws std::invalid_argument when a controlled
// intersection lacks a road on some side or has two on the same side.
void finalize_topology(RoadNetwork& network);

enum class ViolationKind {
    DanglingLane,
    PhaseCount,
    MovementCount,
    PhaseComposition,
    PhaseCoverage,
    AlwaysGreen,
    LaneGeometry,
    DuplicateMovement,
    LaneWiring,
};

struct Violation {
    ViolationKind kind;
    std::string message;
};

// Empty result means the network satisfies every structural invariant.
std::vector<Violation> validate(const RoadNetwork& network);

}  // namespace pdlight

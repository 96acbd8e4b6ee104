#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pdlight/netmodel.hpp"
#include "pdlight/observation.hpp"
#include "pdlight/signalmath.hpp"

namespace pdlight {

// Lane-level path: the lane a vehicle spawns on, then the movements it takes.
// Consecutive movements must chain road to road; the last one must end on a boundary exit.
struct VehicleRoute {
    LaneId first_lane{};
    std::vector<MovementId> movements;

    bool operator==(const VehicleRoute&) const = default;
};

// Per-vehicle attributes as carried in flow files.
struct VehicleSpec {
    double length = 5.0;
    double min_gap = 2.5;
    double max_speed = 40.0 / 3.6;
    double acceleration = 2.0;

    bool operator==(const VehicleSpec&) const = default;
};

struct SpawnEvent {
    double time = 0.0;
    VehicleRoute route;
    std::optional<VehicleSpec> vehicle;  // nullopt: network defaults

    bool operator==(const SpawnEvent&) const = default;
};

enum class VehicleStatus : std::uint8_t { Moving, Queued, Buffered, Exited };

struct VehicleState {
    std::uint32_t id = 0;
    VehicleRoute route;
    std::size_t next_movement = 0;  // index into route.movements
    LaneId lane{};
    double pos = 0.0;
    double speed = 0.0;
    VehicleStatus status = VehicleStatus::Buffered;
    double entered_at = 0.0;
    std::optional<double> exited_at;
    double max_speed = 0.0;
    double acceleration = 0.0;

    std::span<const MovementId> remaining() const {
        return std::span<const MovementId>(route.movements).subspan(next_movement);
    }
};

enum class SignalMode : std::uint8_t { Green, Yellow };

struct SignalState {
    std::uint32_t current_phase = 0;
    SignalMode mode = SignalMode::Green;
    std::int32_t time_remaining = 0;   // seconds left in the current mode
    std::uint32_t next_phase = 0;      // phase that follows the yellow
    std::int32_t pending_green = 0;    // green length queued behind the yellow
    std::int32_t green_elapsed = 0;    // seconds since this phase turned green
};

// Same phase: green is extended by `green` seconds without a yellow. Otherwise a yellow of
// `yellow` seconds is inserted and the new phase then runs for `green` seconds.
SignalState apply_decision(const SignalState& state, std::uint32_t phase, std::int32_t green, std::int32_t yellow);

struct StepTelemetry {
    double time = 0.0;                          // end of the tick
    std::vector<std::int32_t> lane_occupancy;   // per lane, after the tick
    std::vector<std::uint32_t> phase;           // per intersection, in effect during the tick
    std::vector<SignalMode> mode;               // per intersection, in effect during the tick
    std::int32_t entered = 0;                   // vehicles created (spawned or buffered)
    std::int32_t exited = 0;
    std::vector<std::int32_t> discharged;       // per movement id
};

enum class CountMode { Occupancy, Queued };

struct WorldOptions {
    KinematicParams kinematics{};
    std::int32_t yellow = 5;
};

// Discrete-time mesoscopic simulation over a validated RoadNetwork.
//
// Each tick: spawn scheduled vehicles (entry buffers absorb full lanes), advance moving
// vehicles and join queues, discharge queue heads through green movements following the
// platoon clearance law and the destination capacity gate, retire vehicles that reach the
// end of their exit lane, then advance the signal clocks.
class World {
public:
    World(std::shared_ptr<const RoadNetwork> network, std::vector<SpawnEvent> schedule, WorldOptions options = {});

    StepTelemetry step(double dt = 1.0);

    double time() const { return time_; }
    const RoadNetwork& network() const { return *network_; }
    const WorldOptions& options() const { return options_; }

    const SignalState& signal(IntersectionId node) const { return signals_.at(index(node)); }
    std::span<const SignalState> signals() const { return signals_; }
    void set_signal(IntersectionId node, const SignalState& state);
    void apply_decision(IntersectionId node, std::uint32_t phase, std::int32_t green);

    std::int32_t occupancy(LaneId lane) const;
    std::int32_t queue_length(LaneId lane) const;
    std::int32_t count(LaneId lane, CountMode mode) const;
    std::vector<std::uint32_t> lane_vehicles(LaneId lane) const;  // front first
    std::int32_t buffered(LaneId lane) const;

    // n_in from the movement's incoming lane, n_out / n_max from its designated outgoing lane.
    MovementCounts movement_counts(const Movement& m) const;
    std::array<MovementCounts, kMovementsPerIntersection> intersection_counts(IntersectionId node) const;

    std::span<const VehicleState> vehicles() const { return vehicles_; }
    std::int64_t entered_total() const { return static_cast<std::int64_t>(vehicles_.size()); }
    std::int64_t exited_total() const { return exited_total_; }
    std::int64_t buffered_total() const { return buffered_total_; }
    std::int64_t on_network() const { return on_network_; }
    std::size_t scheduled_total() const { return schedule_.size(); }

private:
    struct LaneRuntime {
        std::deque<std::uint32_t> vehicles;  // front = closest to stop line
        std::int32_t queued = 0;
    };
    struct PlatoonClock {
        std::int32_t elapsed = 0;
        std::int32_t passed = 0;
    };

    LaneId destination_lane(const VehicleState& v) const;
    void check_route(const VehicleRoute& route) const;
    void spawn(double dt, StepTelemetry& out);
    void advance(double dt, StepTelemetry& out);
    void discharge(double dt, StepTelemetry& out);
    void retire(StepTelemetry& out);
    void tick_signals(double dt);

    std::shared_ptr<const RoadNetwork> network_;
    WorldOptions options_;
    std::vector<SpawnEvent> schedule_;
    std::size_t cursor_ = 0;
    double time_ = 0.0;

    std::vector<VehicleState> vehicles_;
    std::vector<LaneRuntime> lanes_;
    std::vector<std::deque<std::uint32_t>> buffers_;
    std::vector<std::size_t> spawn_lanes_;
    std::vector<PlatoonClock> platoons_;
    std::vector<SignalState> signals_;
    std::vector<std::array<bool, kMovementsPerIntersection>> phase_mask_;  // per phase index
    std::vector<std::uint32_t> exiting_;

    std::int64_t exited_total_ = 0;
    std::int64_t buffered_total_ = 0;
    std::int64_t on_network_ = 0;
};

// Entries 0..11: counts on the 12 incoming lanes in canonical slot order; 12..15: phase one-hot.
Observation observe(const World& world, IntersectionId node, CountMode mode = CountMode::Occupancy);

}  // namespace pdlight

#include <gtest/gtest.h>

#include <random>

#include "pdlight/engine.hpp"
#include "pdlight/flows.hpp"
#include "support.hpp"

using namespace pdlight;
using testing_support::shared_grid;

namespace {

RoadId entry_on(const RoadNetwork& net, Compass side, std::size_t k = 0) {
    std::size_t seen = 0;
    for (const auto& e : net.boundary_entries) {
        if (e.side == side && seen++ == k) return e.road;
    }
    throw std::logic_error("no entry");
}

std::vector<SpawnEvent> burst(const VehicleRoute& route, int n, double t = 0.0) {
    std::vector<SpawnEvent> out;
    for (int i = 0; i < n; ++i) out.push_back({t, route, std::nullopt});
    return out;
}

SignalState hold(std::uint32_t phase, std::int32_t seconds) {
    SignalState s;
    s.current_phase = phase;
    s.mode = SignalMode::Green;
    s.time_remaining = seconds;
    return s;
}

// Random routes with left, straight and right turns on a grid.
std::vector<SpawnEvent> random_demand(const RoadNetwork& net, std::mt19937_64& rng, int count, double horizon) {
    std::vector<SpawnEvent> out;
    std::uniform_int_distribution<std::size_t> pick_entry(0, net.boundary_entries.size() - 1);
    std::uniform_int_distribution<int> pick_turn(0, 2);
    std::uniform_real_distribution<double> pick_time(0.0, horizon);
    for (int i = 0; i < count; ++i) {
        const auto& entry = net.road(net.boundary_entries[pick_entry(rng)].road);
        VehicleRoute route;
        auto turn = static_cast<Turn>(pick_turn(rng));
        route.first_lane = entry.lanes[static_cast<std::size_t>(turn)];
        LaneId lane = route.first_lane;
        while (true) {
            const auto& road = net.road(net.lane(lane).road);
            if (!road.to) break;
            const auto& node = net.intersection(*road.to);
            std::size_t slot = 0;
            while (node.incoming_lanes[slot] != lane) ++slot;
            const auto& m = node.movements[slot];
            route.movements.push_back(m.id);
            const auto& out_road = net.road(net.lane(m.out_lane).road);
            if (!out_road.to) break;
            turn = static_cast<Turn>(pick_turn(rng));
            lane = out_road.lanes[static_cast<std::size_t>(turn)];
        }
        out.push_back({pick_time(rng), route, std::nullopt});
    }
    return out;
}

}  // namespace

TEST(ApplyDecision, SamePhaseExtendsWithoutYellow) {
    const auto s = apply_decision(hold(2, 3), 2, 10, 5);
    EXPECT_EQ(s.mode, SignalMode::Green);
    EXPECT_EQ(s.current_phase, 2u);
    EXPECT_EQ(s.time_remaining, 13);
}

TEST(ApplyDecision, NewPhaseInsertsYellow) {
    const auto s = apply_decision(hold(0, 0), 1, 12, 5);
    EXPECT_EQ(s.mode, SignalMode::Yellow);
    EXPECT_EQ(s.current_phase, 0u);
    EXPECT_EQ(s.time_remaining, 5);
    EXPECT_EQ(s.next_phase, 1u);
    EXPECT_EQ(s.pending_green, 12);
}

TEST(ApplyDecision, ZeroYellowSwitchesImmediately) {
    const auto s = apply_decision(hold(0, 0), 3, 10, 0);
    EXPECT_EQ(s.mode, SignalMode::Green);
    EXPECT_EQ(s.current_phase, 3u);
    EXPECT_EQ(s.time_remaining, 10);
}

TEST(ApplyDecision, RejectsBadArguments) {
    EXPECT_THROW(apply_decision(hold(0, 0), 4, 10, 5), std::invalid_argument);
    EXPECT_THROW(apply_decision(hold(0, 0), 1, 0, 5), std::invalid_argument);
}

TEST(World, YellowThenGreenTiming) {
    World world(shared_grid(1, 1), {});
    world.apply_decision(IntersectionId{0}, 1, 10);
    for (int t = 0; t < 5; ++t) {
        EXPECT_EQ(world.signal(IntersectionId{0}).mode, SignalMode::Yellow) << t;
        world.step();
    }
    EXPECT_EQ(world.signal(IntersectionId{0}).mode, SignalMode::Green);
    EXPECT_EQ(world.signal(IntersectionId{0}).current_phase, 1u);
    EXPECT_EQ(world.signal(IntersectionId{0}).time_remaining, 10);
    for (int t = 0; t < 10; ++t) world.step();
    EXPECT_EQ(world.signal(IntersectionId{0}).time_remaining, 0);
    EXPECT_EQ(world.signal(IntersectionId{0}).green_elapsed, 10);
}

TEST(World, RejectsOtherTicks) {
    World world(shared_grid(1, 1), {});
    EXPECT_THROW(world.step(0.5), std::invalid_argument);
    EXPECT_THROW(world.step(2.0), std::invalid_argument);
}

TEST(World, RejectsInvalidInputs) {
    EXPECT_THROW(World(nullptr, {}), std::invalid_argument);
    auto broken = build_grid(GridParams{});
    broken.intersections[0].phases.pop_back();
    EXPECT_THROW(World(std::make_shared<const RoadNetwork>(broken), {}), std::invalid_argument);

    const auto net = shared_grid(1, 1);
    auto route = straight_route(*net, entry_on(*net, Compass::West));
    route.movements.clear();
    EXPECT_THROW(World(net, burst(route, 1)), std::invalid_argument);
    auto late = burst(straight_route(*net, entry_on(*net, Compass::West)), 1, -1.0);
    EXPECT_THROW(World(net, late), std::invalid_argument);
}

TEST(World, QueuedPlatoonDischargesPerClearanceLaw) {
    const auto net = shared_grid(1, 1);
    const auto route = straight_route(*net, entry_on(*net, Compass::West));
    World world(net, burst(route, 10));
    const IntersectionId node{0};
    world.set_signal(node, hold(1, 1000));  // west straight is red
    for (int t = 0; t < 120; ++t) world.step();
    const LaneId in = route.first_lane;
    ASSERT_EQ(world.queue_length(in), 10);

    world.set_signal(node, hold(0, 1000));
    const auto slot = movement_slot(Compass::West, Turn::Straight);
    const auto id = net->intersection(node).movements[slot].id;
    const KinematicParams k;
    std::int32_t cumulative = 0;
    for (int t = 1; t <= 10; ++t) {
        const auto tel = world.step();
        cumulative += tel.discharged[index(id)];
        EXPECT_EQ(cumulative, std::min(10, platoon_passable(t, k))) << t;
    }
    EXPECT_EQ(cumulative, 10);
    EXPECT_EQ(world.queue_length(in), 0);
}

TEST(World, NoDischargeDuringRedOrYellow) {
    const auto net = shared_grid(1, 1);
    const auto route = straight_route(*net, entry_on(*net, Compass::West));
    World world(net, burst(route, 5));
    const IntersectionId node{0};
    world.set_signal(node, hold(1, 1000));
    for (int t = 0; t < 100; ++t) {
        const auto tel = world.step();
        for (auto d : tel.discharged) EXPECT_EQ(d, 0);
    }
    world.set_signal(node, hold(0, 0));
    world.apply_decision(node, 1, 10);  // west straight stays red behind a yellow
    for (int t = 0; t < 15; ++t) {
        const auto tel = world.step();
        for (auto d : tel.discharged) EXPECT_EQ(d, 0);
    }
    EXPECT_EQ(world.queue_length(route.first_lane), 5);
}

TEST(World, RightTurnsAlwaysFlow) {
    const auto net = shared_grid(1, 1);
    const auto& entry = net->road(entry_on(*net, Compass::West));
    const auto& node = net->intersection(IntersectionId{0});
    const auto slot = movement_slot(Compass::West, Turn::Right);
    VehicleRoute route{entry.lanes[2], {node.movements[slot].id}};
    World world(net, burst(route, 3));
    world.set_signal(IntersectionId{0}, hold(1, 1000));
    for (int t = 0; t < 200; ++t) world.step();
    EXPECT_EQ(world.exited_total(), 3);
}

TEST(World, CapacityGateBlocksDischarge) {
    // Two intersections in a row: fill the downstream link's straight lane with a standing queue.
    const auto net = shared_grid(1, 2, 60.0, 300.0);  // internal link holds 8 vehicles
    const auto route = straight_route(*net, entry_on(*net, Compass::West));
    ASSERT_EQ(route.movements.size(), 2u);
    const auto& middle = net->movement(route.movements[1]).in_lane;
    const auto cap = net->lane(middle).capacity;
    ASSERT_EQ(cap, 8);
    World world(net, burst(route, 20));
    world.set_signal(IntersectionId{0}, hold(0, 100000));
    world.set_signal(IntersectionId{1}, hold(1, 100000));  // downstream red
    for (int t = 0; t < 300; ++t) {
        world.step();
        ASSERT_LE(world.occupancy(middle), cap);
    }
    EXPECT_EQ(world.occupancy(middle), cap);
    // The entry link is as short as the internal one, so the rest wait in the entry buffer.
    EXPECT_EQ(world.queue_length(route.first_lane), cap);
    EXPECT_EQ(world.buffered_total(), 20 - 2 * cap);
    EXPECT_EQ(world.exited_total(), 0);
}

TEST(World, EntryBufferAbsorbsFullLane) {
    const auto net = shared_grid(1, 1);
    const auto route = straight_route(*net, entry_on(*net, Compass::West));
    World world(net, burst(route, 50));
    world.set_signal(IntersectionId{0}, hold(1, 100000));
    world.step();
    EXPECT_EQ(world.occupancy(route.first_lane), 40);
    EXPECT_EQ(world.buffered(route.first_lane), 10);
    EXPECT_EQ(world.buffered_total(), 10);
    EXPECT_EQ(world.entered_total(), 50);
}

TEST(World, ConservationCapacityAndContinuityUnderRandomDemand) {
    const auto net = shared_grid(3, 3, 150.0, 200.0);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        std::mt19937_64 rng(seed);
        World world(net, random_demand(*net, rng, 1500, 900.0));
        std::uniform_int_distribution<std::uint32_t> pick_phase(0, 3);
        std::vector<LaneId> last_lane;
        for (int t = 0; t < 1200; ++t) {
            for (const auto& node : net->intersections) {
                const auto& s = world.signal(node.id);
                if (s.mode == SignalMode::Green && s.time_remaining == 0) world.apply_decision(node.id, pick_phase(rng), 10);
            }
            const auto tel = world.step();
            std::int64_t on_lanes = 0;
            for (std::size_t li = 0; li < net->lanes.size(); ++li) {
                ASSERT_LE(tel.lane_occupancy[li], net->lanes[li].capacity);
                on_lanes += tel.lane_occupancy[li];
            }
            ASSERT_EQ(world.entered_total(), on_lanes + world.exited_total() + world.buffered_total());
            ASSERT_EQ(world.on_network(), on_lanes);

            // A vehicle changes lane only to the next lane of its own route.
            const auto vehicles = world.vehicles();
            last_lane.resize(vehicles.size(), LaneId{0xffffffffu});
            for (const auto& v : vehicles) {
                auto& prev = last_lane[v.id];
                if (prev != LaneId{0xffffffffu} && prev != v.lane) {
                    ASSERT_GE(v.next_movement, 1u);
                    const auto& m = net->movement(v.route.movements[v.next_movement - 1]);
                    ASSERT_EQ(m.in_lane, prev);
                }
                prev = v.lane;
            }
        }
    }
}

TEST(World, DeterministicReplay) {
    const auto net = shared_grid();
    std::mt19937_64 rng(5);
    const auto demand = random_demand(*net, rng, 800, 600.0);
    auto run = [&] {
        World world(net, demand);
        std::vector<std::int32_t> trace;
        for (int t = 0; t < 700; ++t) {
            for (const auto& node : net->intersections) {
                const auto& s = world.signal(node.id);
                if (s.mode == SignalMode::Green && s.time_remaining == 0) {
                    world.apply_decision(node.id, static_cast<std::uint32_t>((t / 15) % 4), 10);
                }
            }
            const auto tel = world.step();
            trace.insert(trace.end(), tel.lane_occupancy.begin(), tel.lane_occupancy.end());
        }
        return trace;
    };
    EXPECT_EQ(run(), run());
}

TEST(Observe, CountsAndPhaseOneHot) {
    const auto net = shared_grid(1, 1);
    const auto west = straight_route(*net, entry_on(*net, Compass::West));
    const auto north = straight_route(*net, entry_on(*net, Compass::North));
    auto events = burst(west, 3);
    auto more = burst(north, 2);
    events.insert(events.end(), more.begin(), more.end());
    World world(net, events);
    world.set_signal(IntersectionId{0}, hold(2, 1000));
    world.step();
    const auto obs = observe(world, IntersectionId{0});
    EXPECT_EQ(obs[movement_slot(Compass::West, Turn::Straight)], 3.0);
    EXPECT_EQ(obs[movement_slot(Compass::North, Turn::Straight)], 2.0);
    EXPECT_EQ(obs[0], 0.0);
    EXPECT_EQ(obs[12], 0.0);
    EXPECT_EQ(obs[14], 1.0);
    const auto queued = observe(world, IntersectionId{0}, CountMode::Queued);
    EXPECT_EQ(queued[movement_slot(Compass::West, Turn::Straight)], 0.0);
    EXPECT_THROW(observe(world, IntersectionId{5}), std::invalid_argument);
}

TEST(MovementCounts, UsesDesignatedOutgoingLane) {
    const auto net = shared_grid(1, 1);
    const auto west = straight_route(*net, entry_on(*net, Compass::West));
    World world(net, burst(west, 4));
    world.step();
    const auto counts = world.intersection_counts(IntersectionId{0});
    const auto& ws = counts[movement_slot(Compass::West, Turn::Straight)];
    EXPECT_EQ(ws.n_in, 4);
    EXPECT_EQ(ws.n_out, 0);
    EXPECT_EQ(ws.n_max, 40);
}

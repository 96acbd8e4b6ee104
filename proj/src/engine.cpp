#include "pdlight/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pdlight {

SignalState apply_decision(const SignalState& state, std::uint32_t phase, std::int32_t green, std::int32_t yellow) {
    if (phase >= kPhases) throw std::invalid_argument("apply_decision: phase out of range");
    if (green <= 0) throw std::invalid_argument("apply_decision: green duration must be positive");
    SignalState next = state;
    if (state.mode == SignalMode::Green && phase == state.current_phase) {
        next.time_remaining = state.time_remaining + green;
        return next;
    }
    if (yellow <= 0) {
        next.current_phase = phase;
        next.mode = SignalMode::Green;
        next.time_remaining = green;
        next.green_elapsed = 0;
        return next;
    }
    next.mode = SignalMode::Yellow;
    next.time_remaining = yellow;
    next.next_phase = phase;
    next.pending_green = green;
    return next;
}

World::World(std::shared_ptr<const RoadNetwork> network, std::vector<SpawnEvent> schedule, WorldOptions options)
    : network_(std::move(network)), options_(options), schedule_(std::move(schedule)) {
    if (!network_) throw std::invalid_argument("World: null network");
    if (const auto violations = validate(*network_); !violations.empty()) {
        throw std::invalid_argument("World: network failed validation: " + violations.front().message);
    }
    check(options_.kinematics);
    if (options_.yellow < 0) throw std::invalid_argument("World: negative yellow duration");

    std::stable_sort(schedule_.begin(), schedule_.end(),
                     [](const SpawnEvent& a, const SpawnEvent& b) { return a.time < b.time; });
    std::vector<bool> is_spawn_lane(network_->lanes.size(), false);
    for (const auto& e : schedule_) {
        if (!std::isfinite(e.time) || e.time < 0.0) throw std::invalid_argument("World: spawn time must be >= 0");
        check_route(e.route);
        is_spawn_lane[index(e.route.first_lane)] = true;
    }
    for (std::size_t i = 0; i < is_spawn_lane.size(); ++i) {
        if (is_spawn_lane[i]) spawn_lanes_.push_back(i);
    }

    lanes_.resize(network_->lanes.size());
    buffers_.resize(network_->lanes.size());
    platoons_.resize(network_->movement_count());
    signals_.resize(network_->intersections.size());
    for (const auto& phase : standard_phase_table()) {
        std::array<bool, kMovementsPerIntersection> mask{};
        for (std::size_t slot : phase.movements) mask[slot] = true;
        phase_mask_.push_back(mask);
    }
}

void World::check_route(const VehicleRoute& route) const {
    const auto& net = *network_;
    if (index(route.first_lane) >= net.lanes.size()) throw std::invalid_argument("route: unknown first lane");
    LaneId lane = route.first_lane;
    for (std::size_t k = 0; k < route.movements.size(); ++k) {
        if (index(route.movements[k]) >= net.movement_count()) throw std::invalid_argument("route: unknown movement");
        const auto& m = net.movement(route.movements[k]);
        if (k == 0) {
            if (m.in_lane != lane) throw std::invalid_argument("route: first movement does not start on the spawn lane");
        } else if (net.lane(m.in_lane).road != net.lane(lane).road) {
            throw std::invalid_argument("route: movements " + std::to_string(k - 1) + " and " + std::to_string(k) +
                                        " are not connected");
        }
        lane = m.out_lane;
    }
    if (net.road(net.lane(lane).road).to) throw std::invalid_argument("route: does not end on a boundary exit");
}

void World::set_signal(IntersectionId node, const SignalState& state) {
    if (state.current_phase >= kPhases || state.next_phase >= kPhases) {
        throw std::invalid_argument("set_signal: phase out of range");
    }
    signals_.at(index(node)) = state;
}

void World::apply_decision(IntersectionId node, std::uint32_t phase, std::int32_t green) {
    auto& s = signals_.at(index(node));
    s = pdlight::apply_decision(s, phase, green, options_.yellow);
}

std::int32_t World::occupancy(LaneId lane) const {
    return static_cast<std::int32_t>(lanes_.at(index(lane)).vehicles.size());
}

std::int32_t World::queue_length(LaneId lane) const { return lanes_.at(index(lane)).queued; }

std::int32_t World::count(LaneId lane, CountMode mode) const {
    return mode == CountMode::Occupancy ? occupancy(lane) : queue_length(lane);
}

std::vector<std::uint32_t> World::lane_vehicles(LaneId lane) const {
    const auto& q = lanes_.at(index(lane)).vehicles;
    return {q.begin(), q.end()};
}

std::int32_t World::buffered(LaneId lane) const { return static_cast<std::int32_t>(buffers_.at(index(lane)).size()); }

MovementCounts World::movement_counts(const Movement& m) const {
    return MovementCounts{occupancy(m.in_lane), occupancy(m.out_lane), network_->lane(m.out_lane).capacity};
}

std::array<MovementCounts, kMovementsPerIntersection> World::intersection_counts(IntersectionId node) const {
    std::array<MovementCounts, kMovementsPerIntersection> out{};
    const auto& n = network_->intersection(node);
    for (std::size_t slot = 0; slot < kMovementsPerIntersection; ++slot) out[slot] = movement_counts(n.movements[slot]);
    return out;
}

LaneId World::destination_lane(const VehicleState& v) const {
    const auto& moves = v.route.movements;
    if (v.next_movement + 1 < moves.size()) return network_->movement(moves[v.next_movement + 1]).in_lane;
    return network_->movement(moves[v.next_movement]).out_lane;
}

StepTelemetry World::step(double dt) {
    if (dt != 1.0) throw std::invalid_argument("World::step: the tick is fixed at 1 s");
    StepTelemetry out;
    out.time = time_ + dt;
    out.discharged.assign(network_->movement_count(), 0);
    out.phase.reserve(signals_.size());
    out.mode.reserve(signals_.size());
    for (const auto& s : signals_) {
        out.phase.push_back(s.current_phase);
        out.mode.push_back(s.mode);
    }

    spawn(dt, out);
    advance(dt, out);
    discharge(dt, out);
    retire(out);
    tick_signals(dt);
    time_ += dt;

    out.lane_occupancy.reserve(lanes_.size());
    for (const auto& l : lanes_) out.lane_occupancy.push_back(static_cast<std::int32_t>(l.vehicles.size()));
    return out;
}

void World::spawn(double dt, StepTelemetry& out) {
    const auto& net = *network_;
    const double horizon = time_ + dt;
    while (cursor_ < schedule_.size() && schedule_[cursor_].time < horizon) {
        const auto& e = schedule_[cursor_++];
        VehicleState v;
        v.id = static_cast<std::uint32_t>(vehicles_.size());
        v.route = e.route;
        v.lane = e.route.first_lane;
        v.status = VehicleStatus::Buffered;
        v.entered_at = e.time;
        const VehicleSpec spec = e.vehicle.value_or(VehicleSpec{options_.kinematics.vehicle_length,
                                                                options_.kinematics.min_gap,
                                                                options_.kinematics.max_speed,
                                                                options_.kinematics.acceleration});
        v.max_speed = spec.max_speed;
        v.acceleration = spec.acceleration;
        buffers_[index(v.lane)].push_back(v.id);
        vehicles_.push_back(std::move(v));
        ++buffered_total_;
        ++out.entered;
    }
    for (std::size_t li : spawn_lanes_) {
        auto& buffer = buffers_[li];
        auto& lane = lanes_[li];
        const auto& spec = net.lanes[li];
        while (!buffer.empty() && static_cast<std::int32_t>(lane.vehicles.size()) < spec.capacity) {
            auto& v = vehicles_[buffer.front()];
            buffer.pop_front();
            v.status = VehicleStatus::Moving;
            v.pos = 0.0;
            v.speed = std::min(v.max_speed, spec.max_speed);
            lane.vehicles.push_back(v.id);
            --buffered_total_;
            ++on_network_;
        }
    }
}

void World::advance(double dt, StepTelemetry&) {
    const auto& net = *network_;
    const double spacing = options_.kinematics.spacing();
    for (std::size_t li = 0; li < lanes_.size(); ++li) {
        auto& lane = lanes_[li];
        if (lane.vehicles.empty()) continue;
        const auto& spec = net.lanes[li];
        double leader_pos = std::numeric_limits<double>::infinity();
        double leader_speed = std::numeric_limits<double>::infinity();
        std::int32_t queued_ahead = 0;
        for (std::uint32_t id : lane.vehicles) {
            auto& v = vehicles_[id];
            const double vmax = std::min(v.max_speed, spec.max_speed);
            if (v.status == VehicleStatus::Queued) {
                // Queued vehicles close up towards their slot behind the stop line.
                const double slot = spec.length - queued_ahead * spacing;
                if (v.pos < slot) v.pos = std::min(slot, v.pos + vmax * dt);
                leader_pos = v.pos;
                leader_speed = 0.0;
                ++queued_ahead;
                continue;
            }
            const double old_pos = v.pos;
            double speed = std::min(v.speed + v.acceleration * dt, vmax);
            double pos = old_pos + 0.5 * (v.speed + speed) * dt;
            if (pos > leader_pos) {
                pos = std::max(old_pos, leader_pos);
                speed = std::min(speed, leader_speed);
            }
            const bool finished = v.next_movement >= v.route.movements.size();
            const double target = spec.length - queued_ahead * spacing;
            if (!finished && pos >= target) {
                v.pos = std::max(target, old_pos);
                v.speed = 0.0;
                v.status = VehicleStatus::Queued;
                ++lane.queued;
                ++queued_ahead;
            } else {
                v.pos = pos;
                v.speed = speed;
                if (finished && pos >= spec.length) {
                    v.pos = spec.length;
                    exiting_.push_back(id);
                }
            }
            leader_pos = v.pos;
            leader_speed = v.status == VehicleStatus::Queued ? 0.0 : v.speed;
        }
    }
}

void World::discharge(double dt, StepTelemetry& out) {
    const auto& net = *network_;
    const auto& k = options_.kinematics;
    const auto tick = static_cast<std::int32_t>(dt);
    for (const auto& node : net.intersections) {
        const auto& signal = signals_[index(node.id)];
        const auto& mask = phase_mask_[signal.current_phase];
        for (std::size_t slot = 0; slot < kMovementsPerIntersection; ++slot) {
            const auto& m = node.movements[slot];
            auto& clock = platoons_[index(m.id)];
            const bool green = slot_turn(slot) == Turn::Right || (signal.mode == SignalMode::Green && mask[slot]);
            if (!green) {
                clock = {};
                continue;
            }
            auto& in = lanes_[index(m.in_lane)];
            if (in.vehicles.empty() || vehicles_[in.vehicles.front()].status != VehicleStatus::Queued) {
                clock = {};
                continue;
            }
            clock.elapsed += tick;
            std::int32_t allowed = platoon_passable(static_cast<double>(clock.elapsed), k) - clock.passed;
            bool stalled = false;
            while (allowed > 0) {
                if (in.vehicles.empty() || vehicles_[in.vehicles.front()].status != VehicleStatus::Queued) {
                    stalled = true;
                    break;
                }
                auto& v = vehicles_[in.vehicles.front()];
                const LaneId dest = destination_lane(v);
                auto& out_lane = lanes_[index(dest)];
                const auto& dest_spec = net.lane(dest);
                if (static_cast<std::int32_t>(out_lane.vehicles.size()) >= dest_spec.capacity) {
                    stalled = true;
                    break;
                }
                in.vehicles.pop_front();
                --in.queued;
                ++v.next_movement;
                v.lane = dest;
                v.pos = 0.0;
                v.status = VehicleStatus::Moving;
                v.speed = std::min({k.acceleration * clock.elapsed, v.max_speed, dest_spec.max_speed});
                out_lane.vehicles.push_back(v.id);
                ++clock.passed;
                ++out.discharged[index(m.id)];
                --allowed;
            }
            if (stalled) clock = {};
        }
    }
}

void World::retire(StepTelemetry& out) {
    if (exiting_.empty()) return;
    const double now = time_ + 1.0;
    for (std::uint32_t id : exiting_) {
        auto& v = vehicles_[id];
        auto& q = lanes_[index(v.lane)].vehicles;
        q.erase(std::find(q.begin(), q.end(), id));
        v.status = VehicleStatus::Exited;
        v.exited_at = now;
        --on_network_;
        ++exited_total_;
        ++out.exited;
    }
    exiting_.clear();
}

void World::tick_signals(double dt) {
    const auto tick = static_cast<std::int32_t>(dt);
    for (auto& s : signals_) {
        if (s.mode == SignalMode::Yellow) {
            s.time_remaining -= tick;
            if (s.time_remaining <= 0) {
                s.mode = SignalMode::Green;
                s.current_phase = s.next_phase;
                s.time_remaining = s.pending_green;
                s.pending_green = 0;
                s.green_elapsed = 0;
            }
        } else {
            s.time_remaining = std::max(0, s.time_remaining - tick);
            s.green_elapsed += tick;
        }
    }
}

Observation observe(const World& world, IntersectionId node, CountMode mode) {
    const auto& net = world.network();
    if (index(node) >= net.intersections.size()) throw std::invalid_argument("observe: unknown intersection");
    const auto& n = net.intersection(node);
    Observation obs{};
    for (std::size_t slot = 0; slot < kMovementsPerIntersection; ++slot) {
        obs[slot] = static_cast<double>(world.count(n.incoming_lanes[slot], mode));
    }
    obs[kMovementsPerIntersection + world.signal(node).current_phase] = 1.0;
    return obs;
}

}  // namespace pdlight

#include <gtest/gtest.h>

#include <fstream>

#include <spdlog/sinks/ringbuffer_sink.h>
#include <spdlog/spdlog.h>

#include "pdlight/roadnet_io.hpp"
#include "support.hpp"

using namespace pdlight;
using nlohmann::json;

namespace {

// Captures warnings emitted through the default logger for the lifetime of the object.
class LogCapture {
public:
    LogCapture() : sink_(std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(64)) {
        previous_ = spdlog::default_logger();
        spdlog::set_default_logger(std::make_shared<spdlog::logger>("capture", sink_));
    }
    ~LogCapture() { spdlog::set_default_logger(previous_); }
    std::vector<std::string> lines() const { return sink_->last_formatted(); }

private:
    std::shared_ptr<spdlog::sinks::ringbuffer_sink_mt> sink_;
    std::shared_ptr<spdlog::logger> previous_;
};

void expect_same_topology(const RoadNetwork& a, const RoadNetwork& b) {
    ASSERT_EQ(a.intersections.size(), b.intersections.size());
    ASSERT_EQ(a.roads.size(), b.roads.size());
    ASSERT_EQ(a.lanes.size(), b.lanes.size());
    EXPECT_EQ(a.boundary_entries.size(), b.boundary_entries.size());
    for (std::size_t i = 0; i < a.intersections.size(); ++i) {
        const auto& na = a.intersections[i];
        const auto& nb = b.intersections[i];
        EXPECT_EQ(na.name, nb.name);
        for (std::size_t s = 0; s < kMovementsPerIntersection; ++s) {
            const auto& ra = a.road(a.lane(na.movements[s].in_lane).road);
            const auto& rb = b.road(b.lane(nb.movements[s].in_lane).road);
            EXPECT_EQ(ra.name, rb.name);
            EXPECT_EQ(a.lane(na.movements[s].out_lane).name, b.lane(nb.movements[s].out_lane).name);
            EXPECT_EQ(a.lane(na.movements[s].in_lane).capacity, b.lane(nb.movements[s].in_lane).capacity);
        }
    }
}

json single_node_doc() {
    json doc;
    doc["intersections"] = json::array({
        {{"id", "c"}, {"point", {{"x", 0}, {"y", 0}}}, {"virtual", false}},
        {{"id", "w"}, {"point", {{"x", -300}, {"y", 0}}}, {"virtual", true}},
        {{"id", "e"}, {"point", {{"x", 300}, {"y", 0}}}, {"virtual", true}},
        {{"id", "n"}, {"point", {{"x", 0}, {"y", 300}}}, {"virtual", true}},
        {{"id", "s"}, {"point", {{"x", 0}, {"y", -300}}}, {"virtual", true}},
    });
    json roads = json::array();
    const json lanes = json::array({{{"maxSpeed", 11.0}}, {{"maxSpeed", 11.0}}, {{"maxSpeed", 11.0}}});
    for (const char* side : {"w", "e", "n", "s"}) {
        roads.push_back({{"id", std::string("in_") + side}, {"from", side}, {"to", "c"}, {"lanes", lanes}});
        roads.push_back({{"id", std::string("out_") + side}, {"from", "c"}, {"to", side}, {"lanes", lanes}});
    }
    doc["roads"] = roads;
    return doc;
}

}  // namespace

TEST(RoadnetIo, GridRoundTrip) {
    const auto net = build_grid(GridParams{});
    const auto doc = roadnet_to_json(net);
    const auto back = roadnet_from_json(doc, VehicleGeometry{});
    EXPECT_TRUE(validate(back).empty());
    expect_same_topology(net, back);
    ASSERT_TRUE(back.grid.has_value());
    EXPECT_EQ(back.grid->rows, 3u);
    EXPECT_EQ(back.grid->cols, 3u);
    EXPECT_DOUBLE_EQ(back.grid->we_length, 300.0);
}

TEST(RoadnetIo, UnequalGridRoundTripThroughFile) {
    GridParams p;
    p.rows = 2;
    p.cols = 4;
    p.we_length = 800;
    p.ns_length = 600;
    const auto net = build_grid(p);
    testing_support::TempDir dir("roadnet");
    save_roadnet(net, dir / "net.json");
    const auto back = load_roadnet(dir / "net.json", VehicleGeometry{});
    expect_same_topology(net, back);
    for (const auto& lane : back.lanes) {
        const bool we = back.road(lane.road).heading == Compass::East || back.road(lane.road).heading == Compass::West;
        EXPECT_EQ(lane.capacity, we ? 106 : 80);
    }
}

TEST(RoadnetIo, HandWrittenSingleIntersection) {
    const auto net = roadnet_from_json(single_node_doc(), VehicleGeometry{});
    EXPECT_TRUE(validate(net).empty());
    EXPECT_EQ(net.intersections.size(), 1u);
    EXPECT_EQ(net.boundary_entries.size(), 4u);
    const auto& node = net.intersections[0];
    // The west approach arrives on the road heading east.
    EXPECT_EQ(net.road(net.lane(node.incoming_lanes[movement_slot(Compass::West, Turn::Straight)]).road).name, "in_w");
    EXPECT_EQ(net.road(net.lane(node.movements[movement_slot(Compass::West, Turn::Straight)].out_lane).road).name,
              "out_e");
    EXPECT_EQ(net.lane(node.incoming_lanes[0]).capacity, 40);
    EXPECT_DOUBLE_EQ(net.lane(node.incoming_lanes[0]).max_speed, 11.0);
}

TEST(RoadnetIo, UnknownFieldsWarnOnce) {
    auto doc = single_node_doc();
    doc["roads"][0]["priority"] = 3;
    doc["roads"][1]["priority"] = 3;
    doc["flavour"] = "x";
    LogCapture capture;
    EXPECT_NO_THROW(roadnet_from_json(doc, VehicleGeometry{}));
    const auto lines = capture.lines();
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_NE(lines[0].find("road.priority"), std::string::npos);
    EXPECT_NE(lines[0].find("roadnet.flavour"), std::string::npos);
}

TEST(RoadnetIo, RejectsWrongLaneCount) {
    auto doc = single_node_doc();
    doc["roads"][0]["lanes"] = json::array({{{"maxSpeed", 11.0}}, {{"maxSpeed", 11.0}}});
    try {
        roadnet_from_json(doc, VehicleGeometry{});
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("in_w has 2 lanes"), std::string::npos);
    }
}

TEST(RoadnetIo, RejectsUnknownIntersectionAndMissingSide) {
    auto doc = single_node_doc();
    doc["roads"][0]["from"] = "nowhere";
    EXPECT_THROW(roadnet_from_json(doc, VehicleGeometry{}), std::runtime_error);

    auto missing = single_node_doc();
    missing["roads"].erase(0);
    EXPECT_THROW(roadnet_from_json(missing, VehicleGeometry{}), std::invalid_argument);

    EXPECT_THROW(roadnet_from_json(json::array(), VehicleGeometry{}), std::runtime_error);
}

TEST(RoadnetIo, MissingFileAndBadJson) {
    testing_support::TempDir dir("roadnet_bad");
    EXPECT_THROW(load_roadnet(dir / "absent.json", VehicleGeometry{}), std::runtime_error);
    {
        std::ofstream out(dir / "bad.json");
        out << "{ not json";
    }
    EXPECT_THROW(load_roadnet(dir / "bad.json", VehicleGeometry{}), std::runtime_error);
}

TEST(RoadnetIo, LengthFromPoints) {
    auto doc = single_node_doc();
    doc["roads"][0]["points"] = json::array({{{"x", -150}, {"y", 0}}, {{"x", 0}, {"y", 0}}});
    const auto net = roadnet_from_json(doc, VehicleGeometry{});
    const auto road = net.find_road("in_w");
    ASSERT_TRUE(road.has_value());
    EXPECT_DOUBLE_EQ(net.road(*road).length, 150.0);
    EXPECT_EQ(net.lane(net.road(*road).lanes[0]).capacity, 20);
}

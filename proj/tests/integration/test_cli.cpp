#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
    const std::string cmd = std::string(PDLIGHT_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_config(const fs::path& path, const std::string& kind, const std::string& extra = "") {
    std::ofstream(path) << R"({"name": ")" << kind << R"(", "flow": {"generator": "syn-heavy"},
        "controller": {"kind": ")" << kind << R"(", "duration_mode": "dynamic"},
        "episode_length": 600, "learning": {"train_episodes": 2}, "seeds": [0, 1])"
                        << extra << "}";
}

}  // namespace

class Cli : public ::testing::Test {
protected:
    pdlight::testing_support::TempDir dir{"cli"};
};

TEST_F(Cli, GenerateFlowIsDeterministic) {
    ASSERT_EQ(cli("generate-flow syn-light --out " + q(dir / "a.json") + " --roadnet-out " + q(dir / "net.json")), 0);
    ASSERT_EQ(cli("generate-flow syn-light --out " + q(dir / "b.json")), 0);
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
    ASSERT_EQ(cli("generate-flow syn-heavy --roadnet " + q(dir / "net.json") + " --out " + q(dir / "h.json")), 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "h.json"));
    std::size_t events = 0;
    for (const auto& rec : doc) {
        const double span = rec.at("endTime").get<double>() - rec.at("startTime").get<double>();
        events += static_cast<std::size_t>(span / rec.at("interval").get<double>()) + 1;
    }
    EXPECT_EQ(events, 8640u);
    EXPECT_NE(cli("generate-flow syn-medium --out " + q(dir / "c.json")), 0);
}

TEST_F(Cli, RunBaselineTwiceGivesIdenticalOutputs) {
    write_config(dir / "mp.json", "maxpressure");
    for (const char* out : {"r1", "r2"}) {
        ASSERT_EQ(cli("run --config " + q(dir / "mp.json") + " --seed 0 --out " + q(dir / out)), 0);
    }
    for (const char* f : {"metrics.json", "telemetry.csv"}) {
        ASSERT_TRUE(fs::exists(dir / "r1" / f));
        EXPECT_EQ(slurp(dir / "r1" / f), slurp(dir / "r2" / f)) << f;
    }
}

TEST_F(Cli, TrainEvalAndRunWithCheckpoint) {
    write_config(dir / "dqn.json", "dqn");
    ASSERT_EQ(cli("train --config " + q(dir / "dqn.json") + " --out " + q(dir / "t1") + " --jobs 2"), 0);
    ASSERT_EQ(cli("train --config " + q(dir / "dqn.json") + " --out " + q(dir / "t2") + " --jobs 1"), 0);
    for (const char* f : {"metrics.json", "telemetry.csv", "learning_curve.csv", "seed_1/best.ckpt"}) {
        EXPECT_EQ(slurp(dir / "t1" / f), slurp(dir / "t2" / f)) << f;
    }
    const auto ckpt = dir / "t1" / "seed_0" / "best.ckpt";
    ASSERT_EQ(cli("eval --config " + q(dir / "dqn.json") + " --checkpoint " + q(ckpt) + " --out " + q(dir / "e1")), 0);
    ASSERT_EQ(cli("eval --config " + q(dir / "dqn.json") + " --checkpoint " + q(ckpt) + " --out " + q(dir / "e2")), 0);
    EXPECT_EQ(slurp(dir / "e1" / "metrics.json"), slurp(dir / "e2" / "metrics.json"));
    EXPECT_EQ(slurp(dir / "e1" / "telemetry.csv"), slurp(dir / "e2" / "telemetry.csv"));
    // Evaluating the best checkpoint reproduces the training report for seed 0.
    const auto trained = nlohmann::json::parse(slurp(dir / "t1" / "metrics.json"));
    const auto evaluated = nlohmann::json::parse(slurp(dir / "e1" / "metrics.json"));
    EXPECT_EQ(trained.at("seeds")[0].at("average_travel_time"), evaluated.at("seeds")[0].at("average_travel_time"));

    ASSERT_EQ(cli("run --config " + q(dir / "dqn.json") + " --checkpoint " + q(ckpt) + " --out " + q(dir / "r")), 0);
    EXPECT_EQ(slurp(dir / "r" / "telemetry.csv"), slurp(dir / "e1" / "telemetry.csv"));
    EXPECT_NE(cli("run --config " + q(dir / "dqn.json") + " --out " + q(dir / "r0")), 0);

    write_config(dir / "fixed.json", "fixed");
    EXPECT_NE(cli("train --config " + q(dir / "fixed.json") + " --out " + q(dir / "bad")), 0);
}

TEST_F(Cli, CompareWritesTableAndIsDeterministic) {
    write_config(dir / "fixed.json", "fixed");
    write_config(dir / "mp.json", "maxpressure");
    for (const char* out : {"c1", "c2"}) {
        ASSERT_EQ(cli("compare --configs " + q(dir / "fixed.json") + " " + q(dir / "mp.json") + " --out " +
                      q(dir / out)),
                  0);
    }
    EXPECT_EQ(slurp(dir / "c1" / "metrics.json"), slurp(dir / "c2" / "metrics.json"));
    EXPECT_EQ(slurp(dir / "c1" / "fixed" / "telemetry.csv"), slurp(dir / "c2" / "fixed" / "telemetry.csv"));
    const auto table = slurp(dir / "c1" / "comparison.txt");
    EXPECT_NE(table.find("maxpressure"), std::string::npos);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "c1" / "metrics.json")).size(), 2u);
}

TEST_F(Cli, CaseStudyAndFlowStats) {
    write_config(dir / "g.json", "greedy_prcol");
    ASSERT_EQ(cli("run --config " + q(dir / "g.json") + " --out " + q(dir / "run")), 0);
    ASSERT_EQ(cli("case-study --telemetry " + q(dir / "run" / "telemetry.csv") + " --out " + q(dir / "cs1")), 0);
    ASSERT_EQ(cli("case-study --telemetry " + q(dir / "run" / "telemetry.csv") + " --out " + q(dir / "cs2")), 0);
    for (const char* f : {"case_study.csv", "phase_summary.csv", "duration_summary.csv", "case_study_summary.json"}) {
        ASSERT_TRUE(fs::exists(dir / "cs1" / f)) << f;
        EXPECT_EQ(slurp(dir / "cs1" / f), slurp(dir / "cs2" / f)) << f;
    }
    ASSERT_EQ(cli("flow-stats --config " + q(dir / "g.json") + " --road road_0_1_0 --out " + q(dir / "fs.csv")), 0);
    EXPECT_NE(slurp(dir / "fs.csv").find("road_0_1_0_1,"), std::string::npos);
    EXPECT_NE(cli("flow-stats --config " + q(dir / "g.json") + " --road nope --out " + q(dir / "fs2.csv")), 0);
}

TEST_F(Cli, RejectsBadInvocations) {
    EXPECT_NE(cli(""), 0);
    EXPECT_NE(cli("run --config " + q(dir / "missing.json") + " --out " + q(dir / "x")), 0);
    std::ofstream(dir / "bad.json") << R"({"controller": {"kind": "fixed"}, "typo": 1})";
    EXPECT_NE(cli("run --config " + q(dir / "bad.json") + " --out " + q(dir / "x")), 0);
}

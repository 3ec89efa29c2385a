#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "odonav/io.hpp"

namespace fs = std::filesystem;
using odonav::read_text;
using odonav::write_text_atomic;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "odonav_cli_test";

int cli(const std::string& args) {
    const std::string cmd = std::string(ODONAV_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string p(const std::string& rel) { return (kRoot / rel).string(); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kRoot);
        fs::create_directories(kRoot);
        write_text_atomic(p("cfg.json"), R"({
  "simulation": {"duration": 200, "randomize_biases": true},
  "training": {"architecture": "reduced", "epochs": 1, "batch_size": 32, "stride": 10}
})");
        ASSERT_EQ(cli("simulate --config " + p("cfg.json") + " --seed 3 --out " + p("s1")), 0);
    }
    static void TearDownTestSuite() { fs::remove_all(kRoot); }
};

void expect_same_files(const std::string& a, const std::string& b) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const fs::path other = fs::path(b) / e.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(read_text(e.path().string()), read_text(other.string())) << e.path().filename();
        ++n;
    }
    EXPECT_GT(n, 0u);
}

}  // namespace

TEST_F(Cli, SimulateIsByteIdentical) {
    ASSERT_EQ(cli("simulate --config " + p("cfg.json") + " --seed 3 --out " + p("s2")), 0);
    expect_same_files(p("s1"), p("s2"));
    for (const char* f : {"imu.csv", "gnss.csv", "wheel.csv", "speed_truth.csv", "truth.csv", "scenario.json"}) {
        EXPECT_TRUE(fs::exists(p(std::string("s1/") + f))) << f;
    }
}

TEST_F(Cli, DifferentSeedDiffers) {
    ASSERT_EQ(cli("simulate --config " + p("cfg.json") + " --seed 4 --out " + p("s4")), 0);
    EXPECT_NE(read_text(p("s1/imu.csv")), read_text(p("s4/imu.csv")));
}

TEST_F(Cli, FuseIsByteIdentical) {
    for (const char* mode : {"nhc", "wheel"}) {
        const std::string m = mode;
        ASSERT_EQ(cli("fuse --config " + p("cfg.json") + " --data " + p("s1") + " --mode " + m + " --out " + p("f_" + m + "_a")), 0);
        ASSERT_EQ(cli("fuse --config " + p("cfg.json") + " --data " + p("s1") + " --mode " + m + " --out " + p("f_" + m + "_b")), 0);
        expect_same_files(p("f_" + m + "_a"), p("f_" + m + "_b"));
    }
}

TEST_F(Cli, TrainInferAndPseudoFuseAreByteIdentical) {
    for (const char* run : {"a", "b"}) {
        const std::string r = run;
        ASSERT_EQ(cli("train --config " + p("cfg.json") + " --seed 5 --data " + p("s1") + " --out " + p("t_" + r)), 0);
        ASSERT_EQ(cli("infer --config " + p("cfg.json") + " --data " + p("s1") + " --model " + p("t_" + r + "/model.json") +
                      " --out " + p("i_" + r)),
                  0);
        ASSERT_EQ(cli("fuse --config " + p("cfg.json") + " --data " + p("s1") + " --mode pseudo --model " +
                      p("t_" + r + "/model.json") + " --out " + p("fp_" + r)),
                  0);
        ASSERT_EQ(cli("evaluate --data " + p("s1") + " --fused " + p("fp_" + r) + " --out " + p("e_" + r)), 0);
    }
    expect_same_files(p("t_a"), p("t_b"));
    expect_same_files(p("i_a"), p("i_b"));
    expect_same_files(p("fp_a"), p("fp_b"));
    expect_same_files(p("e_a"), p("e_b"));
    const auto m = nlohmann::json::parse(read_text(p("e_a/metrics.json")));
    EXPECT_TRUE(m.contains("speed_raw"));
    EXPECT_TRUE(m.contains("zero_velocity"));
}

TEST_F(Cli, EvaluateTruthAsFusedGivesZeroError) {
    for (const char* mode : {"nhc", "pseudo", "wheel"}) {
        const std::string d = p(std::string("fx_") + mode);
        fs::create_directories(d);
        fs::copy_file(p("s1/truth.csv"), d + "/nav.csv", fs::copy_options::overwrite_existing);
        write_text_atomic(d + "/run.json", std::string(R"({"mode": ")") + mode +
                                               R"(", "schedule": {"start": 60, "length": 60, "period": 180}})");
        ASSERT_EQ(cli("evaluate --data " + p("s1") + " --fused " + d + " --out " + p(std::string("ev_") + mode)), 0);
        const auto m = nlohmann::json::parse(read_text(p(std::string("ev_") + mode + "/metrics.json")));
        EXPECT_EQ(m.at("outage").at("rms").get<double>(), 0.0);
        EXPECT_EQ(m.at("outage").at("windows").size(), 1u);
    }
    ASSERT_EQ(cli("report --eval " + p("ev_wheel/metrics.json") + " " + p("ev_nhc/metrics.json") + " " +
                  p("ev_pseudo/metrics.json") + " --out " + p("rep")),
              0);
    const auto j = nlohmann::json::parse(read_text(p("rep/report.json")));
    ASSERT_EQ(j.at("rows").size(), 3u);
    EXPECT_EQ(j.at("rows")[0].at("mode"), "nhc");
    EXPECT_EQ(j.at("rows")[1].at("mode"), "pseudo");
    EXPECT_EQ(j.at("rows")[2].at("mode"), "wheel");
    const std::string txt = read_text(p("rep/report.txt"));
    EXPECT_NE(txt.find("\nnhc "), std::string::npos);
    EXPECT_NE(txt.find("\npseudo "), std::string::npos);
    EXPECT_NE(txt.find("\nwheel "), std::string::npos);
}

TEST_F(Cli, BadInvocationsFail) {
    EXPECT_NE(cli(""), 0);
    EXPECT_NE(cli("simulate --bogus"), 0);
    EXPECT_NE(cli("fuse --data " + p("s1") + " --mode pseudo --out " + p("x")), 0);  // no model
    EXPECT_NE(cli("fuse --data " + p("s1") + " --mode odo"), 0);
    write_text_atomic(p("bad.json"), R"({"fusion": {"unknown": 1}})");
    EXPECT_NE(cli("simulate --config " + p("bad.json") + " --out " + p("x")), 0);
}

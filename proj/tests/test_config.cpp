#include <gtest/gtest.h>

#include "odonav/config.hpp"

using namespace odonav;

namespace {

std::string error_of(const std::string& text) {
    try {
        config_from_json(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, Defaults) {
    const AppConfig c = default_config();
    EXPECT_EQ(c.outage.start, 60.0);
    EXPECT_EQ(c.outage.length, 60.0);
    EXPECT_EQ(c.outage.period, 180.0);
    EXPECT_EQ(c.fusion.fir_order, 64);
    EXPECT_EQ(c.fusion.fir_cutoff, 0.1);
    EXPECT_EQ(c.fusion.sigma_pseudo, 0.3);
    EXPECT_EQ(c.fusion.sigma_wheel, 0.1);
    EXPECT_EQ(c.fusion.velocity_update_rate, 1.0);
    EXPECT_EQ(c.architecture, "odonet");
}

TEST(Config, EmptyObjectGivesDefaults) {
    EXPECT_EQ(config_to_json(config_from_json("{}")), config_to_json(default_config()));
}

TEST(Config, SerializedRoundTrip) {
    AppConfig c = default_config();
    c.simulation.drive.duration = 123.0;
    c.simulation.mounting = {0.0, 2.0 * kDeg, -1.0 * kDeg};
    c.training.learning_rate = 3e-4;
    c.fusion.gate.mode = GateMode::Literal;
    c.outage.start = 30.0;
    const std::string text = config_to_json(c);
    EXPECT_EQ(config_to_json(config_from_json(text)), text);
    const AppConfig back = config_from_json(text);
    EXPECT_NEAR(back.simulation.mounting.pitch, 2.0 * kDeg, 1e-15);
    EXPECT_EQ(back.fusion.gate.mode, GateMode::Literal);
}

TEST(Config, PartialOverride) {
    const AppConfig c = config_from_json(R"({"fusion": {"sigma_pseudo": 0.5}, "outage": {"start": 10}})");
    EXPECT_EQ(c.fusion.sigma_pseudo, 0.5);
    EXPECT_EQ(c.fusion.sigma_wheel, 0.1);
    EXPECT_EQ(c.outage.start, 10.0);
    EXPECT_EQ(c.outage.period, 180.0);
}

TEST(Config, UnknownKeysRejected) {
    EXPECT_NE(error_of(R"({"simulaton": {}})").find("simulaton"), std::string::npos);
    EXPECT_NE(error_of(R"({"fusion": {"gate": {"mode": "squared", "extra": 1}}})").find("fusion.gate.extra"),
              std::string::npos);
}

TEST(Config, WrongTypesAndValuesRejected) {
    EXPECT_NE(error_of(R"({"training": {"epochs": "ten"}})"), "");
    EXPECT_NE(error_of(R"({"simulation": {"lever_arm": [1, 2]}})"), "");
    EXPECT_NE(error_of(R"({"fusion": {"gate": {"mode": "cubic"}}})"), "");
    EXPECT_NE(error_of(R"({"training": {"architecture": "resnet"}})"), "");
    EXPECT_NE(error_of(R"({"training": {"stride": 0}})"), "");
    EXPECT_NE(error_of(R"({"outage": {"length": 200}})"), "");
    EXPECT_NE(error_of("[1, 2]"), "");
    EXPECT_NE(error_of("{"), "");
}

TEST(Config, ArchitectureNames) {
    EXPECT_EQ(architecture_by_name("odonet").length, kWindowLength);
    EXPECT_THROW(architecture_by_name("x"), std::runtime_error);
}

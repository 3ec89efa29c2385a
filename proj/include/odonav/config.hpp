#pragma once

#include <string>

#include "odonav/fusion.hpp"
#include "odonav/sim.hpp"
#include "odonav/speednet.hpp"

namespace odonav {

struct SimulationConfig {
    RandomDriveOptions drive;
    GeodeticPosition origin{30.5 * kDeg, 114.3 * kDeg, 20.0};

    // Sensor errors. With randomize_* set, each scenario draws its own
    // values uniformly within +-range from the scenario seed.
    Vec3 gyro_bias = Vec3::Zero();      // rad/s
    Vec3 accel_bias = Vec3::Zero();     // m/s^2
    bool randomize_biases = false;
    double gyro_bias_range = 2.0 * kDeg;
    double accel_bias_range = 0.2;
    double gyro_noise = 0.05 * kDeg;    // rad/s per sample
    double accel_noise = 0.02;          // m/s^2 per sample
    double wheel_noise = 0.02;          // m/s per sample
    Vec3 gnss_std = Vec3(0.02, 0.02, 0.05);
    double gnss_rate = 1.0;             // Hz
    RideVibration vibration{Vec3(0.004, 0.003, 0.012), Vec3(0.0004, 0.0008, 0.0002), 0.3};

    EulerAngles mounting;               // true C_v^b angles
    bool randomize_mounting = false;
    EulerAngles mounting_range{2.0 * kDeg, 5.0 * kDeg, 5.0 * kDeg};
    Vec3 lever_arm = Vec3::Zero();      // b-frame, m
};

struct AppConfig {
    SimulationConfig simulation;
    TrainConfig training;
    std::size_t training_stride = 5;
    double training_warmup = 0.0;       // s of each scenario left out of the data set
    std::string architecture = "odonet";  // odonet | reduced
    FusionConfig fusion;
    bool estimate_mounting = true;
    double static_bias_window = 5.0;    // s at rest used to seed the gyro bias; 0 disables
    OutageSchedule outage;
};

AppConfig default_config();

// Unknown keys, wrong types and invalid values are errors.
AppConfig config_from_json(const std::string& text);
std::string config_to_json(const AppConfig& cfg);
AppConfig load_config(const std::string& path);

Architecture architecture_by_name(const std::string& name);

}  // namespace odonav

#pragma once

#include <vector>

#include "odonav/geo.hpp"

namespace odonav {

inline constexpr double kImuRateHz = 50.0;
inline constexpr double kImuPeriod = 1.0 / kImuRateHz;

struct ImuSample {
    double t = 0.0;
    Vec3 gyro = Vec3::Zero();   // rad/s
    Vec3 accel = Vec3::Zero();  // specific force, m/s^2
};

struct GnssFix {
    double t = 0.0;
    GeodeticPosition pos;
    Vec3 std = Vec3::Ones();  // NED, m
    bool valid = true;
};

struct SpeedSample {
    double t = 0.0;
    double v = 0.0;  // m/s
};

// Position, velocity and attitude of the IMU. att is C_b^n.
struct NavState {
    GeodeticPosition pos;
    Vec3 vel = Vec3::Zero();
    Rotation att = Rotation::Identity();
};

struct BiasEstimate {
    Vec3 gyro = Vec3::Zero();   // rad/s
    Vec3 accel = Vec3::Zero();  // m/s^2
};

// Mounting of the IMU in the vehicle. C_b^v = euler_to_rotation(angles)^T, so a
// pure heading mounting of +90 deg maps b-frame x onto v-frame -y.
struct MountingConfig {
    EulerAngles angles;
    Vec3 lever_arm = Vec3::Zero();  // b-frame, IMU -> wheel measurement point, m

    Rotation c_bv() const { return euler_to_rotation(angles).transpose(); }
    Rotation c_vb() const { return euler_to_rotation(angles); }
};

using ImuSeries = std::vector<ImuSample>;
using GnssSeries = std::vector<GnssFix>;
using SpeedSeries = std::vector<SpeedSample>;

}  // namespace odonav

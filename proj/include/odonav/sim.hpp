#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "odonav/types.hpp"

namespace odonav {

struct Stop {
    double duration = 0.0;
};

// Speed ramps linearly from v_start to v_end over the segment.
struct Straight {
    double duration = 0.0;
    double v_start = 0.0;
    double v_end = 0.0;
};

struct Turn {
    double duration = 0.0;
    double speed = 0.0;
    double heading_rate = 0.0;  // rad/s, positive turns right (NED)
};

using Segment = std::variant<Stop, Straight, Turn>;

double segment_duration(const Segment& s);

struct TrajectorySpec {
    std::vector<Segment> segments;
    GeodeticPosition origin;
    double initial_heading = 0.0;
    double rate_hz = kImuRateHz;
};

// Road excitation seen by the IMU. Amplitudes scale with speed and the phase
// follows the wheel rotation angle, so the vibration frequency is
// v / (2 pi r). Expressed in the v-frame.
struct RideVibration {
    Vec3 accel_gain = Vec3::Zero();  // (m/s^2) per (m/s)
    Vec3 gyro_gain = Vec3::Zero();   // (rad/s) per (m/s)
    double wheel_radius = 0.3;       // m
};

struct SensorErrorModel {
    Vec3 gyro_bias = Vec3::Zero();   // rad/s
    Vec3 accel_bias = Vec3::Zero();  // m/s^2
    double gyro_noise = 0.0;         // rad/s per sample
    double accel_noise = 0.0;        // m/s^2 per sample
    Vec3 gnss_std = Vec3(0.02, 0.02, 0.05);  // m, per NED axis
    double wheel_noise = 0.0;        // m/s per sample while moving
    RideVibration vibration;
    std::uint64_t seed = 0;
};

struct OutageSchedule {
    double start = 0.0;
    double length = 60.0;
    double period = 180.0;

    void validate() const;
    bool contains(double t) const;
    // Outage windows [begin, end) that lie completely inside [t0, t1].
    std::vector<std::pair<double, double>> windows(double t0, double t1) const;
};

// Truth is the IMU point with a v-frame aligned body. The vehicle moves along
// its own forward axis, so nav[k].att is C_v^n.
struct ScenarioTruth {
    std::vector<double> t;
    std::vector<NavState> nav;
    std::vector<double> speed;         // forward speed, m/s
    std::vector<double> accel;         // dv/dt, averaged at segment boundaries
    std::vector<double> heading_rate;  // rad/s, averaged at segment boundaries
    std::vector<double> distance;      // path length, m
    std::vector<ImuSample> ideal_imu;  // noise-free, v-frame axes
    std::vector<bool> stationary;

    std::size_t size() const { return t.size(); }
};

ScenarioTruth generate_truth(const TrajectorySpec& spec);

// Measured IMU in the b-frame: mounting rotation + vibration + bias + noise.
ImuSeries synthesize_imu(const ScenarioTruth& truth, const SensorErrorModel& err, const MountingConfig& mount);

// Velocity of the wheel measurement point expressed in the v-frame.
Vec3 wheel_velocity_truth(const ScenarioTruth& truth, std::size_t k, const MountingConfig& mount);

SpeedSeries wheel_speed_truth(const ScenarioTruth& truth, const MountingConfig& mount);

// Odometer reading: truth speed plus noise while moving, exactly zero at rest.
SpeedSeries synthesize_wheel(const ScenarioTruth& truth, const SensorErrorModel& err, const MountingConfig& mount);

GnssSeries synthesize_gnss(const ScenarioTruth& truth, const SensorErrorModel& err, double rate_hz,
                           const std::vector<OutageSchedule>& outages = {});

// Attitude of the IMU body (C_b^n) at truth epoch k for the given mounting.
Rotation imu_attitude(const ScenarioTruth& truth, std::size_t k, const MountingConfig& mount);

struct RandomDriveOptions {
    double duration = 90.0;    // s, approximate
    double max_speed = 25.0;   // m/s
    double min_accel = 0.5;
    double max_accel = 2.0;
    double stop_probability = 0.25;
    double turn_probability = 0.35;
    double initial_stop = 10.0;
};

// Random urban-style drive: stop, ramps, cruises, turns and stops. Segment
// durations land on the sample grid.
TrajectorySpec random_drive(const RandomDriveOptions& opt, const GeodeticPosition& origin, std::uint64_t seed);

}  // namespace odonav

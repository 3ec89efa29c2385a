#pragma once

#include <cstddef>
#include <vector>

#include "odonav/speednet.hpp"
#include "odonav/types.hpp"

namespace odonav {

// Pitch and heading mounting; roll is not observable from motion and stays 0.
struct MountingEstimate {
    double pitch = 0.0;    // rad
    double heading = 0.0;  // rad

    EulerAngles angles() const { return {0.0, pitch, heading}; }
    MountingConfig config(const Vec3& lever_arm = Vec3::Zero()) const { return {angles(), lever_arm}; }
};

struct MountingQualifier {
    double min_speed = 2.0;              // m/s
    double max_yaw_rate = 0.5 * kDeg;    // rad/s
    double min_duration = 30.0;          // s of qualifying samples
};

ImuSeries compensate_biases(const ImuSeries& samples, const BiasEstimate& biases);
// One bias estimate per sample.
ImuSeries compensate_biases(const ImuSeries& samples, const std::vector<BiasEstimate>& biases);

// v_body: IMU velocity in the b-frame; yaw_rate: vertical angular rate.
// Uses samples faster than min_speed with |yaw_rate| below the limit and
// returns the angles that rotate their mean velocity onto the v-frame x axis.
// Throws when less than min_duration of data qualifies.
MountingEstimate estimate_mounting_angles(const std::vector<Vec3>& v_body, const std::vector<double>& yaw_rate,
                                          double dt, const MountingQualifier& q = {});

// Rotates angular rate and specific force by C_b^v.
ImuSeries apply_mounting(const ImuSeries& samples, const MountingEstimate& est);
ImuSeries apply_mounting(const ImuSeries& samples, const Rotation& c_bv);

// Bias compensation in the b-frame, then rotation into the v-frame. The
// order matters once the rotation is not the identity.
ImuSeries clean_imu(const ImuSeries& samples, const BiasEstimate& biases, const MountingEstimate& est);

// Windows of 50 v-frame samples ending at indices 49, 49 + stride, ...
// Label is the wheel speed at the window end (clamped at 0). Throws when the
// streams are not sample-aligned.
std::vector<LabeledWindow> build_windows(const ImuSeries& samples, const SpeedSeries& wheel, std::size_t stride = 1);

// Window ending at raw[end]: every row compensated with bias, then rotated
// by c_bv.
WindowInput cleaned_window(const ImuSeries& raw, std::size_t end, const BiasEstimate& bias, const Rotation& c_bv);

// Training windows built the same way the network is fed at inference time.
std::vector<LabeledWindow> build_windows(const ImuSeries& raw, const std::vector<BiasEstimate>& biases,
                                         const MountingEstimate& est, const SpeedSeries& wheel, std::size_t stride);

// Raw network speed at every epoch from 49 on. Each window is compensated
// with the bias estimate of its last sample and rotated by the mounting.
SpeedSeries infer_speed(const SpeedNet& model, const ImuSeries& raw, const std::vector<BiasEstimate>& biases,
                        const MountingEstimate& est);

}  // namespace odonav

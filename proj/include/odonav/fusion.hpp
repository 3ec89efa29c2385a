#pragma once

#include <optional>
#include <string>
#include <vector>

#include "odonav/ekf.hpp"
#include "odonav/io.hpp"
#include "odonav/pipeline.hpp"
#include "odonav/speednet.hpp"

namespace odonav {

enum class AidingMode { NhcOnly, PseudoOdo, WheelOdo };

std::string to_string(AidingMode m);
AidingMode aiding_mode_from_string(const std::string& s);  // nhc | pseudo | wheel

struct FusionConfig {
    AidingMode mode = AidingMode::NhcOnly;
    double sigma_nhc = 0.1;            // m/s
    double sigma_zupt = 0.1;           // m/s
    double sigma_zaru = 0.1 * kDeg;    // rad/s
    double sigma_pseudo = 0.3;         // m/s
    double sigma_wheel = 0.1;          // m/s
    double velocity_update_rate = 1.0; // Hz
    double gnss_max_std = 1.0;         // m; fixes at or above this are not used
    // After this many consecutive fixes with a gated-out component the
    // position variance is inflated by the innovation squared, so a filter
    // that drifted while overconfident can lock back on. 0 disables.
    int gnss_reset_after = 5;
    GateConfig gate;
    MountingConfig mount;
    ProcessNoise process_noise;
    InitialUncertainty initial;
    int fir_order = 64;
    double fir_cutoff = 0.1;           // Hz
    bool velocity_updates = true;      // false gives a GNSS-only solution

    void validate() const;
};

struct InitialState {
    double t = 0.0;
    NavState nav;
    StateMat covariance = StateMat::Identity();
    BiasEstimate biases;  // starting bias estimate
};

// Position from the first valid fix (P_rr from its std), zero velocity,
// the given attitude, remaining covariance from u. Throws without a valid fix.
InitialState initialize(const GnssSeries& gnss, const Rotation& attitude, const InitialUncertainty& u);
InitialState initialize_from_truth(double t, const NavState& truth, const InitialUncertainty& u);

// Roll and pitch from the mean specific force of the first samples (vehicle
// at rest), heading supplied by the caller.
Rotation coarse_level(const ImuSeries& imu, std::size_t n_samples, double heading);

// Gyro bias from the mean rate over the first `window` seconds at rest,
// less the earth rate seen through the given attitude.
Vec3 static_gyro_bias(const ImuSeries& imu, const NavState& nav, double window);

struct FusionInputs {
    ImuSeries imu;     // b-frame, raw
    GnssSeries gnss;
    SpeedSeries wheel; // required for the wheel mode, sample-aligned with imu
};

struct FusionOutput {
    NavSeries nav;                      // one per IMU epoch from the initial epoch on
    std::vector<BiasEstimate> biases;   // estimate in use at each epoch
    std::vector<UpdateLogEntry> log;
    SpeedSeries raw_speed;              // pseudo mode only
    SpeedSeries filtered_speed;         // pseudo mode only
    std::optional<MountingEstimate> mounting;  // when estimated from the data
};

// GNSS-only pass: bias history used to compensate the network input.
struct CleaningResult {
    FusionOutput solution;
    std::optional<MountingEstimate> mounting;  // empty when too little data qualifies
};

CleaningResult run_cleaning_pass(const FusionInputs& in, const FusionConfig& cfg, const InitialState& init);

// Network speed on compensated, mounting-corrected windows followed by the
// zero-phase FIR. Returned series are aligned with imu[49..].
struct PseudoSpeed {
    SpeedSeries raw;
    SpeedSeries filtered;
};
PseudoSpeed pseudo_odometer(const SpeedNet& model, const ImuSeries& imu, const std::vector<BiasEstimate>& biases,
                            const MountingEstimate& mount, const FusionConfig& cfg);

// Full run. In pseudo mode the model is required and the run does an
// internal cleaning pass first; the mounting used for the network input and
// for the velocity updates is cfg.mount unless estimate_mounting is set and
// enough straight driving qualifies (output.mounting then holds the estimate).
FusionOutput run(const FusionInputs& in, const FusionConfig& cfg, const InitialState& init,
                 const SpeedNet* model = nullptr, bool estimate_mounting = false);

// Single pass with externally supplied forward speeds (aligned with imu by
// time; epochs without a speed fall back to NHC).
FusionOutput run_pass(const FusionInputs& in, const FusionConfig& cfg, const InitialState& init,
                      const SpeedSeries* forward_speed);

}  // namespace odonav

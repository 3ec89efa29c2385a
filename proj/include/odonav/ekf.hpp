#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odonav/types.hpp"

namespace odonav {

inline constexpr int kStateDim = 15;
using StateVec = Eigen::Matrix<double, kStateDim, 1>;
using StateMat = Eigen::Matrix<double, kStateDim, kStateDim>;

// Offsets into the error state [dr dv psi dbg dba].
enum StateIndex : int { kPos = 0, kVel = 3, kAtt = 6, kGyroBias = 9, kAccelBias = 12 };

// Continuous-time noise densities.
struct ProcessNoise {
    double gyro_arw = 0.0;       // rad^2/s
    double accel_vrw = 0.0;      // m^2/s^3
    double gyro_bias_rw = 0.0;   // rad^2/s^3
    double accel_bias_rw = 0.0;  // m^2/s^5
};

struct InitialUncertainty {
    double pos = 1.0;                 // m
    double vel = 0.1;                 // m/s
    double roll_pitch = 0.5 * kDeg;   // rad
    double heading = 2.0 * kDeg;      // rad
    double gyro_bias = 2.0 * kDeg;    // rad/s
    double accel_bias = 0.2;          // m/s^2
};

enum class GateMode {
    Squared,  // reject when y^2 > threshold
    Literal,  // reject when |y| > threshold
};

struct GateConfig {
    GateMode mode = GateMode::Squared;
    double threshold = 3.84;
    bool enabled = true;

    bool rejects(double normalized) const;
};

struct UpdateReport {
    std::string type;
    bool applied = false;
    bool skipped = false;  // measurement not usable (invalid or too uncertain)
    std::vector<int> components;
    std::vector<double> innovation;
    std::vector<double> normalized;
    std::vector<int> rejected;
};

// 15-state psi-angle error-state filter. Error conventions:
//   dr = r_hat - r, dv = v_hat - v, C_hat = (I - [psi x]) C,
//   dbg/dba = residual bias left in the compensated measurement.
class ErrorStateEkf {
public:
    ErrorStateEkf() = default;
    ErrorStateEkf(const StateMat& p0, const ProcessNoise& q, const GateConfig& gate = {});

    const StateVec& error() const { return x_; }
    const StateMat& covariance() const { return p_; }
    void set_covariance(const StateMat& p) { p_ = p; }
    const GateConfig& gate() const { return gate_; }
    void set_gate(const GateConfig& g) { gate_ = g; }

    // P <- Phi P Phi^T + Q with Phi = I + F dt.
    void predict(const StateMat& f, const StateMat& q, double dt);

    // Psi-angle error dynamics for the current solution; imu is compensated.
    void predict(const NavState& nav, const ImuSample& imu, double dt);

    // Scalar-sequential update with per-component gating and Joseph form.
    UpdateReport update(const Eigen::VectorXd& dz, const Eigen::MatrixXd& h, const Eigen::VectorXd& r_diag,
                        const std::vector<int>& component_ids = {});

    UpdateReport update_gnss_position(const NavState& nav, const GnssFix& fix, double max_std = 1.0);

    // Vehicle-frame velocity at the wheel point. With no forward speed only
    // the lateral and vertical rows (NHC) are used.
    UpdateReport update_vframe_velocity(const NavState& nav, const ImuSample& imu, const MountingConfig& mount,
                                        std::optional<double> v_forward, double sigma_forward, double sigma_nhc);

    UpdateReport update_zupt(const NavState& nav, double sigma = 0.1);
    // Innovation is the compensated rate minus the earth rate at rest.
    UpdateReport update_zaru(const NavState& nav, const ImuSample& imu, double sigma = 0.1 * kDeg);

    // Applies the error estimate to nav and biases, then zeroes it.
    void feedback(NavState& nav, BiasEstimate& biases);

    StateMat dynamics(const NavState& nav, const ImuSample& imu) const;
    StateMat process_noise(const NavState& nav, double dt) const;

private:
    StateVec x_ = StateVec::Zero();
    StateMat p_ = StateMat::Identity();
    ProcessNoise q_;
    GateConfig gate_;
};

StateMat initial_covariance(const InitialUncertainty& u);

// Predicted v-frame velocity of the wheel point (lever-arm model).
Vec3 predicted_vframe_velocity(const NavState& nav, const ImuSample& imu, const MountingConfig& mount);

}  // namespace odonav

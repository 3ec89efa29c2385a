#include "odonav/ekf.hpp"

#include <cmath>
#include <stdexcept>

namespace odonav {

bool GateConfig::rejects(double y) const {
    if (!enabled) return false;
    if (mode == GateMode::Squared) return y * y > threshold;
    return std::abs(y) > threshold;
}

ErrorStateEkf::ErrorStateEkf(const StateMat& p0, const ProcessNoise& q, const GateConfig& gate)
    : p_(p0), q_(q), gate_(gate) {}

StateMat initial_covariance(const InitialUncertainty& u) {
    StateVec d;
    d << Vec3::Constant(u.pos * u.pos), Vec3::Constant(u.vel * u.vel),
        Vec3(u.roll_pitch * u.roll_pitch, u.roll_pitch * u.roll_pitch, u.heading * u.heading),
        Vec3::Constant(u.gyro_bias * u.gyro_bias), Vec3::Constant(u.accel_bias * u.accel_bias);
    return d.asDiagonal();
}

void ErrorStateEkf::predict(const StateMat& f, const StateMat& q, double dt) {
    const StateMat phi = StateMat::Identity() + f * dt;
    x_ = phi * x_;
    p_ = phi * p_ * phi.transpose() + q;
    p_ = 0.5 * (p_ + p_.transpose()).eval();
}

StateMat ErrorStateEkf::dynamics(const NavState& nav, const ImuSample& imu) const {
    const Vec3 w_ie = earth_rate_ned(nav.pos.lat);
    const Vec3 w_en = transport_rate_ned(nav.pos, nav.vel);
    const Vec3 f_n = nav.att * imu.accel;
    const double g = normal_gravity(nav.pos);
    const double r = std::sqrt(meridian_radius(nav.pos.lat) * normal_radius(nav.pos.lat)) + nav.pos.h;

    StateMat f = StateMat::Zero();
    f.block<3, 3>(kPos, kPos) = -skew(w_en);
    f.block<3, 3>(kPos, kVel) = Mat3::Identity();
    f.block<3, 3>(kVel, kVel) = -skew(2.0 * w_ie + w_en);
    f(kVel + 2, kPos + 2) = 2.0 * g / r;
    f.block<3, 3>(kVel, kAtt) = skew(f_n);
    f.block<3, 3>(kVel, kAccelBias) = nav.att;
    f.block<3, 3>(kAtt, kAtt) = -skew(w_ie + w_en);
    f.block<3, 3>(kAtt, kGyroBias) = -nav.att;
    return f;
}

StateMat ErrorStateEkf::process_noise(const NavState& /*nav*/, double dt) const {
    // Attitude and velocity noise are isotropic, so C Q C^T = Q.
    StateMat q = StateMat::Zero();
    q.block<3, 3>(kVel, kVel) = Mat3::Identity() * q_.accel_vrw * dt;
    q.block<3, 3>(kAtt, kAtt) = Mat3::Identity() * q_.gyro_arw * dt;
    q.block<3, 3>(kGyroBias, kGyroBias) = Mat3::Identity() * q_.gyro_bias_rw * dt;
    q.block<3, 3>(kAccelBias, kAccelBias) = Mat3::Identity() * q_.accel_bias_rw * dt;
    return q;
}

void ErrorStateEkf::predict(const NavState& nav, const ImuSample& imu, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("predict: dt must be positive");
    predict(dynamics(nav, imu), process_noise(nav, dt), dt);
}

UpdateReport ErrorStateEkf::update(const Eigen::VectorXd& dz, const Eigen::MatrixXd& h, const Eigen::VectorXd& r_diag,
                                   const std::vector<int>& component_ids) {
    const auto m = dz.size();
    if (h.rows() != m || h.cols() != kStateDim || r_diag.size() != m) {
        throw std::invalid_argument("update: dimension mismatch");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        if (!(r_diag[j] > 0.0)) throw std::invalid_argument("update: measurement variance must be positive");
    }

    UpdateReport report;
    for (Eigen::Index j = 0; j < m; ++j) {
        const int id = component_ids.empty() ? static_cast<int>(j) : component_ids[static_cast<std::size_t>(j)];
        const Eigen::Matrix<double, 1, kStateDim> hj = h.row(j);
        const double residual = dz[j] - (hj * x_)(0);
        const double s = (hj * p_ * hj.transpose())(0) + r_diag[j];
        const double y = residual / std::sqrt(s);

        report.components.push_back(id);
        report.innovation.push_back(dz[j]);
        report.normalized.push_back(y);
        if (gate_.rejects(y)) {
            report.rejected.push_back(id);
            continue;
        }

        const StateVec k = p_ * hj.transpose() / s;
        x_ += k * residual;
        const StateMat ikh = StateMat::Identity() - k * hj;
        p_ = ikh * p_ * ikh.transpose() + k * r_diag[j] * k.transpose();
        p_ = 0.5 * (p_ + p_.transpose()).eval();
        report.applied = true;
    }
    return report;
}

UpdateReport ErrorStateEkf::update_gnss_position(const NavState& nav, const GnssFix& fix, double max_std) {
    if (!fix.valid || (fix.std.array() >= max_std).any()) {
        UpdateReport report;
        report.type = "gnss";
        report.skipped = true;
        return report;
    }
    const Vec3 dz = geodetic_to_local(nav.pos, fix.pos);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, kStateDim);
    h.block<3, 3>(0, kPos) = Mat3::Identity();
    UpdateReport report = update(dz, h, fix.std.cwiseAbs2());
    report.type = "gnss";
    return report;
}

Vec3 predicted_vframe_velocity(const NavState& nav, const ImuSample& imu, const MountingConfig& mount) {
    const Rotation c_nb = nav.att.transpose();
    const Vec3 w_in = earth_rate_ned(nav.pos.lat) + transport_rate_ned(nav.pos, nav.vel);
    const Vec3 w_nb = imu.gyro - c_nb * w_in;
    const Rotation c_bv = mount.c_bv();
    return c_bv * c_nb * nav.vel + c_bv * w_nb.cross(mount.lever_arm);
}

UpdateReport ErrorStateEkf::update_vframe_velocity(const NavState& nav, const ImuSample& imu,
                                                   const MountingConfig& mount, std::optional<double> v_forward,
                                                   double sigma_forward, double sigma_nhc) {
    const Rotation c_bv = mount.c_bv();
    const Rotation c_vn = c_bv * nav.att.transpose();
    const Vec3 predicted = predicted_vframe_velocity(nav, imu, mount);

    Eigen::Matrix<double, 3, kStateDim> h_full = Eigen::Matrix<double, 3, kStateDim>::Zero();
    h_full.block<3, 3>(0, kVel) = c_vn;
    h_full.block<3, 3>(0, kAtt) = -c_vn * skew(nav.vel);
    h_full.block<3, 3>(0, kGyroBias) = -c_bv * skew(mount.lever_arm);

    const Vec3 measured(v_forward.value_or(0.0), 0.0, 0.0);
    const Vec3 dz_full = predicted - measured;
    const Vec3 r_full(sigma_forward * sigma_forward, sigma_nhc * sigma_nhc, sigma_nhc * sigma_nhc);

    std::vector<int> rows;
    if (v_forward) rows.push_back(0);
    rows.push_back(1);
    rows.push_back(2);

    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd dz(m), r(m);
    Eigen::MatrixXd h(m, kStateDim);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int row = rows[static_cast<std::size_t>(i)];
        dz[i] = dz_full[row];
        r[i] = r_full[row];
        h.row(i) = h_full.row(row);
    }
    UpdateReport report = update(dz, h, r, rows);
    report.type = v_forward ? "odo" : "nhc";
    return report;
}

UpdateReport ErrorStateEkf::update_zupt(const NavState& nav, double sigma) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, kStateDim);
    h.block<3, 3>(0, kVel) = Mat3::Identity();
    UpdateReport report = update(nav.vel, h, Eigen::Vector3d::Constant(sigma * sigma));
    report.type = "zupt";
    return report;
}

UpdateReport ErrorStateEkf::update_zaru(const NavState& nav, const ImuSample& imu, double sigma) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, kStateDim);
    h.block<3, 3>(0, kGyroBias) = Mat3::Identity();
    const Vec3 dz = imu.gyro - nav.att.transpose() * earth_rate_ned(nav.pos.lat);
    UpdateReport report = update(dz, h, Eigen::Vector3d::Constant(sigma * sigma));
    report.type = "zaru";
    return report;
}

void ErrorStateEkf::feedback(NavState& nav, BiasEstimate& biases) {
    const Vec3 dr = x_.segment<3>(kPos);
    if (!dr.isZero(0.0)) nav.pos = local_to_geodetic(-dr, nav.pos);
    nav.vel -= x_.segment<3>(kVel);
    const Vec3 psi = x_.segment<3>(kAtt);
    if (!psi.isZero(0.0)) nav.att = rotvec_to_rotation(psi) * nav.att;
    biases.gyro += x_.segment<3>(kGyroBias);
    biases.accel += x_.segment<3>(kAccelBias);
    x_.setZero();
}

}  // namespace odonav

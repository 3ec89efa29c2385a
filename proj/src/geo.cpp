#include "odonav/geo.hpp"

#include <cmath>
#include <numbers>

namespace odonav {

Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

Rotation euler_to_rotation(const EulerAngles& e) {
    const double cr = std::cos(e.roll), sr = std::sin(e.roll);
    const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
    const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
    Rotation c;
    c << cp * cy, -cr * sy + sr * sp * cy, sr * sy + cr * sp * cy,
         cp * sy, cr * cy + sr * sp * sy, -sr * cy + cr * sp * sy,
         -sp, sr * cp, cr * cp;
    return c;
}

EulerAngles rotation_to_euler(const Rotation& c) {
    EulerAngles e;
    e.pitch = std::atan2(-c(2, 0), std::hypot(c(2, 1), c(2, 2)));
    if (std::abs(std::abs(e.pitch) - std::numbers::pi / 2.0) < 1e-6) {
        // Only yaw - roll (or yaw + roll) is defined here.
        e.roll = 0.0;
        e.yaw = std::atan2(-c(0, 1), c(1, 1));
        return e;
    }
    e.roll = std::atan2(c(2, 1), c(2, 2));
    e.yaw = std::atan2(c(1, 0), c(0, 0));
    return e;
}

std::optional<EulerAngles> rotation_to_euler_checked(const Rotation& c) {
    const double pitch = std::atan2(-c(2, 0), std::hypot(c(2, 1), c(2, 2)));
    if (std::abs(std::abs(pitch) - std::numbers::pi / 2.0) < 1e-6) {
        return std::nullopt;
    }
    return rotation_to_euler(c);
}

Rotation rotvec_to_rotation(const Vec3& phi) {
    const double angle = phi.norm();
    const Mat3 k = skew(phi);
    if (angle < 1e-8) {
        return Mat3::Identity() + k + 0.5 * k * k;
    }
    const double a = std::sin(angle) / angle;
    const double b = (1.0 - std::cos(angle)) / (angle * angle);
    return Mat3::Identity() + a * k + b * k * k;
}

Rotation orthonormalize(const Rotation& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 out = svd.matrixU() * svd.matrixV().transpose();
    if (out.determinant() < 0.0) {
        Mat3 u = svd.matrixU();
        u.col(2) *= -1.0;
        out = u * svd.matrixV().transpose();
    }
    return out;
}

double wrap_angle(double a) {
    a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a - std::numbers::pi;
}

double normal_gravity(const GeodeticPosition& p) {
    using namespace wgs84;
    const double s2 = std::sin(p.lat) * std::sin(p.lat);
    const double g0 = kGravityEquator * (1.0 + kSomiglianaK * s2) / std::sqrt(1.0 - kEccSq * s2);
    const double h = p.h;
    return g0 * (1.0 - 2.0 / kSemiMajor * (1.0 + kFlattening + kGravityM - 2.0 * kFlattening * s2) * h +
                 3.0 * h * h / (kSemiMajor * kSemiMajor));
}

double meridian_radius(double lat) {
    using namespace wgs84;
    const double s2 = std::sin(lat) * std::sin(lat);
    return kSemiMajor * (1.0 - kEccSq) / std::pow(1.0 - kEccSq * s2, 1.5);
}

double normal_radius(double lat) {
    using namespace wgs84;
    const double s2 = std::sin(lat) * std::sin(lat);
    return kSemiMajor / std::sqrt(1.0 - kEccSq * s2);
}

Vec3 earth_rate_ned(double lat) {
    return {wgs84::kEarthRate * std::cos(lat), 0.0, -wgs84::kEarthRate * std::sin(lat)};
}

Vec3 transport_rate_ned(const GeodeticPosition& p, const Vec3& v) {
    const double rm = meridian_radius(p.lat) + p.h;
    const double rn = normal_radius(p.lat) + p.h;
    return {v.y() / rn, -v.x() / rm, -v.y() * std::tan(p.lat) / rn};
}

Vec3 geodetic_to_local(const GeodeticPosition& p, const GeodeticPosition& origin) {
    const double rm = meridian_radius(origin.lat) + origin.h;
    const double rn = normal_radius(origin.lat) + origin.h;
    return {(p.lat - origin.lat) * rm, (p.lon - origin.lon) * rn * std::cos(origin.lat), origin.h - p.h};
}

GeodeticPosition local_to_geodetic(const Vec3& ned, const GeodeticPosition& origin) {
    const double rm = meridian_radius(origin.lat) + origin.h;
    const double rn = normal_radius(origin.lat) + origin.h;
    return {origin.lat + ned.x() / rm, origin.lon + ned.y() / (rn * std::cos(origin.lat)), origin.h - ned.z()};
}

}  // namespace odonav

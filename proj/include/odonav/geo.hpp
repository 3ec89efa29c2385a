#pragma once

#include <optional>

#include <Eigen/Dense>

namespace odonav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Direction cosine matrix. By convention C_a^b maps a-frame vectors into the b-frame.
using Rotation = Eigen::Matrix3d;

namespace wgs84 {
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccSq = kFlattening * (2.0 - kFlattening);
inline constexpr double kEarthRate = 7.2921151467e-5;  // rad/s
inline constexpr double kGravityEquator = 9.7803253359;
inline constexpr double kGravityPole = 9.8321849379;
inline constexpr double kSomiglianaK = 0.00193185265241;
inline constexpr double kGravityM = 0.00344978650684;  // omega^2 a^2 b / GM
}  // namespace wgs84

inline constexpr double kDeg = 3.14159265358979323846 / 180.0;

struct GeodeticPosition {
    double lat = 0.0;  // rad
    double lon = 0.0;  // rad
    double h = 0.0;    // m, ellipsoidal
};

// ZYX convention: yaw about down, then pitch, then roll.
struct EulerAngles {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
};

Mat3 skew(const Vec3& v);

// Returns C_b^n for the body attitude described by e.
Rotation euler_to_rotation(const EulerAngles& e);

// Inverse of euler_to_rotation. At gimbal lock roll is set to zero and the
// remaining rotation is folded into yaw.
EulerAngles rotation_to_euler(const Rotation& c_bn);

// Same, but empty when |pitch| is within 1e-6 rad of pi/2.
std::optional<EulerAngles> rotation_to_euler_checked(const Rotation& c_bn);

// Rodrigues formula: exp([phi x]).
Rotation rotvec_to_rotation(const Vec3& phi);

// Nearest orthonormal matrix (polar factor).
Rotation orthonormalize(const Rotation& r);

double wrap_angle(double a);

// Somigliana normal gravity with free-air height correction, positive down.
double normal_gravity(const GeodeticPosition& p);

// Meridian (M) and prime-vertical (N) radii of curvature.
double meridian_radius(double lat);
double normal_radius(double lat);

// Earth rotation rate and transport rate resolved in the local NED frame.
Vec3 earth_rate_ned(double lat);
Vec3 transport_rate_ned(const GeodeticPosition& p, const Vec3& vel_ned);

// NED displacement of p relative to origin using the curvature radii at the
// origin. Valid for offsets of a few tens of km.
Vec3 geodetic_to_local(const GeodeticPosition& p, const GeodeticPosition& origin);
GeodeticPosition local_to_geodetic(const Vec3& ned, const GeodeticPosition& origin);

}  // namespace odonav

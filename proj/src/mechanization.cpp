#include "odonav/mechanization.hpp"

#include <cmath>
#include <stdexcept>

namespace odonav {

NavState mechanize_step(const NavState& state, const ImuSample& prev, const ImuSample& curr) {
    const double dt = curr.t - prev.t;
    if (!(dt > 0.0)) throw std::invalid_argument("mechanize_step: timestamps must increase");
    if (dt < kMinStepDt || dt > kMaxStepDt) throw std::invalid_argument("mechanize_step: step outside 50 Hz tolerance");

    const Vec3 dtheta = 0.5 * (prev.gyro + curr.gyro) * dt;
    const Vec3 dvel = 0.5 * (prev.accel + curr.accel) * dt;

    const GeodeticPosition& p = state.pos;
    const Vec3 w_ie = earth_rate_ned(p.lat);
    const Vec3 w_en = transport_rate_ned(p, state.vel);
    const Vec3 w_in = w_ie + w_en;
    const Vec3 g_n(0.0, 0.0, normal_gravity(p));

    // Specific-force increment at mid-interval attitude.
    const Vec3 dv_f = (Mat3::Identity() - 0.5 * skew(w_in * dt)) * state.att * (dvel + 0.5 * dtheta.cross(dvel));
    const Vec3 v_mid = state.vel + 0.5 * (dv_f + g_n * dt);
    const Vec3 dv_cg = (g_n - (2.0 * w_ie + w_en).cross(v_mid)) * dt;

    NavState next;
    next.vel = state.vel + dv_f + dv_cg;

    const Vec3 v_avg = 0.5 * (state.vel + next.vel);
    next.pos.h = p.h - v_avg.z() * dt;
    const double h_mid = 0.5 * (p.h + next.pos.h);
    next.pos.lat = p.lat + v_avg.x() * dt / (meridian_radius(p.lat) + h_mid);
    const double lat_mid = 0.5 * (p.lat + next.pos.lat);
    next.pos.lon = p.lon + v_avg.y() * dt / ((normal_radius(lat_mid) + h_mid) * std::cos(lat_mid));

    next.att = orthonormalize(rotvec_to_rotation(-w_in * dt) * state.att * rotvec_to_rotation(dtheta));
    return next;
}

}  // namespace odonav

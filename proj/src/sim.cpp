#include "odonav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace odonav {

namespace {

double start_speed(const Segment& s) {
    return std::visit(
        [](const auto& seg) -> double {
            using T = std::decay_t<decltype(seg)>;
            if constexpr (std::is_same_v<T, Stop>) return 0.0;
            else if constexpr (std::is_same_v<T, Straight>) return seg.v_start;
            else return seg.speed;
        },
        s);
}

double end_speed(const Segment& s) {
    return std::visit(
        [](const auto& seg) -> double {
            using T = std::decay_t<decltype(seg)>;
            if constexpr (std::is_same_v<T, Stop>) return 0.0;
            else if constexpr (std::is_same_v<T, Straight>) return seg.v_end;
            else return seg.speed;
        },
        s);
}

struct Kinematics {
    double speed = 0.0;
    double accel = 0.0;
    double heading = 0.0;
    double heading_rate = 0.0;
    double distance = 0.0;
};

// Piecewise analytic speed/heading profile.
class Profile {
public:
    explicit Profile(const TrajectorySpec& spec) : spec_(spec) {
        double t = 0.0, heading = spec.initial_heading, dist = 0.0;
        for (const auto& seg : spec.segments) {
            starts_.push_back(t);
            headings_.push_back(heading);
            distances_.push_back(dist);
            const Kinematics end = local(seg, segment_duration(seg), heading, dist);
            t += segment_duration(seg);
            heading = end.heading;
            dist = end.distance;
        }
        total_ = t;
    }

    double total() const { return total_; }
    const std::vector<double>& starts() const { return starts_; }

    // right=true evaluates the segment starting at t when t is a boundary.
    // Starts are sums of durations, so boundaries are matched with a tolerance.
    Kinematics at(double t, bool right) const {
        constexpr double kEps = 1e-9;
        const auto it = right ? std::upper_bound(starts_.begin(), starts_.end(), t + kEps)
                              : std::lower_bound(starts_.begin(), starts_.end(), t - kEps);
        const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - starts_.begin() - 1, 0));
        return local(spec_.segments[i], t - starts_[i], headings_[i], distances_[i]);
    }

private:
    static Kinematics local(const Segment& s, double tau, double heading0, double dist0) {
        Kinematics k;
        k.heading = heading0;
        k.distance = dist0;
        std::visit(
            [&](const auto& seg) {
                using T = std::decay_t<decltype(seg)>;
                if constexpr (std::is_same_v<T, Straight>) {
                    k.accel = (seg.v_end - seg.v_start) / seg.duration;
                    k.speed = seg.v_start + k.accel * tau;
                    k.distance = dist0 + seg.v_start * tau + 0.5 * k.accel * tau * tau;
                } else if constexpr (std::is_same_v<T, Turn>) {
                    k.speed = seg.speed;
                    k.heading_rate = seg.heading_rate;
                    k.heading = heading0 + seg.heading_rate * tau;
                    k.distance = dist0 + seg.speed * tau;
                }
            },
            s);
        return k;
    }

    const TrajectorySpec& spec_;
    std::vector<double> starts_;
    std::vector<double> headings_;
    std::vector<double> distances_;
    double total_ = 0.0;
};

Vec3 velocity_ned(double speed, double heading) {
    return {speed * std::cos(heading), speed * std::sin(heading), 0.0};
}

void validate(const TrajectorySpec& spec) {
    if (spec.segments.empty()) throw std::invalid_argument("trajectory has no segments");
    if (!(spec.rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
    for (std::size_t i = 0; i < spec.segments.size(); ++i) {
        const auto& s = spec.segments[i];
        const double d = segment_duration(s);
        if (!(d > 0.0)) throw std::invalid_argument("segment " + std::to_string(i) + ": duration must be > 0");
        const double samples = d * spec.rate_hz;
        if (std::abs(samples - std::round(samples)) > 1e-6) {
            throw std::invalid_argument("segment " + std::to_string(i) +
                                        ": duration must be a whole number of sample periods");
        }
        if (start_speed(s) < 0.0 || end_speed(s) < 0.0) {
            throw std::invalid_argument("segment " + std::to_string(i) + ": negative speed");
        }
        if (i > 0 && std::abs(end_speed(spec.segments[i - 1]) - start_speed(s)) > 1e-9) {
            throw std::invalid_argument("segment " + std::to_string(i) + ": speed discontinuity");
        }
    }
}

}  // namespace

double segment_duration(const Segment& s) {
    return std::visit([](const auto& seg) { return seg.duration; }, s);
}

void OutageSchedule::validate() const {
    if (!(length > 0.0 && length < period)) throw std::invalid_argument("outage schedule needs 0 < length < period");
}

bool OutageSchedule::contains(double t) const {
    if (t < start) return false;
    return std::fmod(t - start, period) < length;
}

std::vector<std::pair<double, double>> OutageSchedule::windows(double t0, double t1) const {
    validate();
    std::vector<std::pair<double, double>> out;
    for (double b = start; b + length <= t1 + 1e-9; b += period) {
        if (b >= t0 - 1e-9) out.emplace_back(b, b + length);
    }
    return out;
}

ScenarioTruth generate_truth(const TrajectorySpec& spec) {
    validate(spec);
    const Profile profile(spec);
    const double dt = 1.0 / spec.rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(profile.total() * spec.rate_hz)) + 1;

    std::vector<double> boundaries(profile.starts().begin() + 1, profile.starts().end());

    ScenarioTruth truth;
    truth.t.reserve(n);
    truth.nav.reserve(n);

    GeodeticPosition pos = spec.origin;
    auto deriv = [&](double t, const GeodeticPosition& p) {
        const Kinematics k = profile.at(t, true);
        const Vec3 v = velocity_ned(k.speed, k.heading);
        const double rm = meridian_radius(p.lat) + p.h;
        const double rn = normal_radius(p.lat) + p.h;
        return std::pair{v.x() / rm, v.y() / (rn * std::cos(p.lat))};
    };

    constexpr int kSubsteps = 4;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.rate_hz;
        if (i > 0) {
            const double h = dt / kSubsteps;
            for (int s = 0; s < kSubsteps; ++s) {
                const double ts = static_cast<double>(i - 1) * dt + s * h;
                auto at = [&](double dl, double dn) { return GeodeticPosition{pos.lat + dl, pos.lon + dn, pos.h}; };
                const auto k1 = deriv(ts, pos);
                const auto k2 = deriv(ts + 0.5 * h, at(0.5 * h * k1.first, 0.5 * h * k1.second));
                const auto k3 = deriv(ts + 0.5 * h, at(0.5 * h * k2.first, 0.5 * h * k2.second));
                const auto k4 = deriv(ts + h, at(h * k3.first, h * k3.second));
                pos.lat += h / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
                pos.lon += h / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
            }
        }

        const Kinematics right = profile.at(t, true);
        const Kinematics left = profile.at(t, false);
        const bool on_boundary = std::any_of(boundaries.begin(), boundaries.end(),
                                             [&](double b) { return std::abs(b - t) < 1e-9; });
        Kinematics k = right;
        if (i + 1 == n) k = left;
        if (on_boundary) {
            k.accel = 0.5 * (left.accel + right.accel);
            k.heading_rate = 0.5 * (left.heading_rate + right.heading_rate);
        }

        NavState nav;
        nav.pos = pos;
        nav.vel = velocity_ned(k.speed, k.heading);
        nav.att = euler_to_rotation({0.0, 0.0, k.heading});

        const Rotation c_nv = nav.att.transpose();
        const Vec3 w_ie = earth_rate_ned(pos.lat);
        const Vec3 w_en = transport_rate_ned(pos, nav.vel);
        const double ch = std::cos(k.heading), sh = std::sin(k.heading);
        const Vec3 acc_n(k.accel * ch - k.speed * k.heading_rate * sh, k.accel * sh + k.speed * k.heading_rate * ch,
                         0.0);
        const Vec3 f_n = acc_n + (2.0 * w_ie + w_en).cross(nav.vel) - Vec3(0.0, 0.0, normal_gravity(pos));

        ImuSample ideal;
        ideal.t = t;
        ideal.gyro = Vec3(0.0, 0.0, k.heading_rate) + c_nv * (w_ie + w_en);
        ideal.accel = c_nv * f_n;

        truth.t.push_back(t);
        truth.nav.push_back(nav);
        truth.speed.push_back(k.speed);
        truth.accel.push_back(k.accel);
        truth.heading_rate.push_back(k.heading_rate);
        truth.distance.push_back(k.distance);
        truth.ideal_imu.push_back(ideal);
        truth.stationary.push_back(k.speed < 1e-9);
    }
    return truth;
}

Rotation imu_attitude(const ScenarioTruth& truth, std::size_t k, const MountingConfig& mount) {
    return truth.nav[k].att * mount.c_bv();
}

ImuSeries synthesize_imu(const ScenarioTruth& truth, const SensorErrorModel& err, const MountingConfig& mount) {
    std::mt19937_64 rng(err.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Rotation c_vb = mount.c_vb();
    const auto& vib = err.vibration;

    ImuSeries out;
    out.reserve(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        Vec3 w = truth.ideal_imu[k].gyro;
        Vec3 f = truth.ideal_imu[k].accel;

        const double v = truth.speed[k];
        if (v > 0.0 && vib.wheel_radius > 0.0) {
            const double phase = truth.distance[k] / vib.wheel_radius;
            f += v * Vec3(vib.accel_gain.x() * std::sin(phase + 0.7), vib.accel_gain.y() * std::sin(phase + 1.9),
                          vib.accel_gain.z() * std::sin(phase));
            w += v * Vec3(vib.gyro_gain.x() * std::cos(phase + 1.3), vib.gyro_gain.y() * std::cos(phase),
                          vib.gyro_gain.z() * std::cos(phase + 2.1));
        }

        ImuSample s;
        s.t = truth.t[k];
        s.gyro = c_vb * w + err.gyro_bias;
        s.accel = c_vb * f + err.accel_bias;
        for (int i = 0; i < 3; ++i) s.gyro[i] += err.gyro_noise * normal(rng);
        for (int i = 0; i < 3; ++i) s.accel[i] += err.accel_noise * normal(rng);
        out.push_back(s);
    }
    return out;
}

Vec3 wheel_velocity_truth(const ScenarioTruth& truth, std::size_t k, const MountingConfig& mount) {
    const Rotation c_bn = imu_attitude(truth, k, mount);
    const Rotation c_bv = mount.c_bv();
    const Vec3 w_nb_v(0.0, 0.0, truth.heading_rate[k]);
    const Vec3 w_nb_b = mount.c_vb() * w_nb_v;
    return c_bv * (c_bn.transpose() * truth.nav[k].vel + w_nb_b.cross(mount.lever_arm));
}

SpeedSeries wheel_speed_truth(const ScenarioTruth& truth, const MountingConfig& mount) {
    SpeedSeries out;
    out.reserve(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double v = truth.stationary[k] ? 0.0 : wheel_velocity_truth(truth, k, mount).x();
        out.push_back({truth.t[k], std::max(0.0, v)});
    }
    return out;
}

SpeedSeries synthesize_wheel(const ScenarioTruth& truth, const SensorErrorModel& err, const MountingConfig& mount) {
    std::mt19937_64 rng(err.seed ^ 0x5bd1e995ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    SpeedSeries out = wheel_speed_truth(truth, mount);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double noise = err.wheel_noise * normal(rng);
        if (!truth.stationary[k]) out[k].v = std::max(0.0, out[k].v + noise);
    }
    return out;
}

GnssSeries synthesize_gnss(const ScenarioTruth& truth, const SensorErrorModel& err, double rate_hz,
                           const std::vector<OutageSchedule>& outages) {
    if (truth.size() < 2) return {};
    const double imu_rate = 1.0 / (truth.t[1] - truth.t[0]);
    const double ratio = imu_rate / rate_hz;
    if (!(rate_hz > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-6) {
        throw std::invalid_argument("GNSS rate must divide the IMU rate");
    }
    const auto step = static_cast<std::size_t>(std::llround(ratio));
    for (const auto& o : outages) o.validate();

    std::mt19937_64 rng(err.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    GnssSeries out;
    for (std::size_t k = 0; k < truth.size(); k += step) {
        const Vec3 noise(err.gnss_std.x() * normal(rng), err.gnss_std.y() * normal(rng),
                         err.gnss_std.z() * normal(rng));
        GnssFix fix;
        fix.t = truth.t[k];
        fix.pos = local_to_geodetic(noise, truth.nav[k].pos);
        fix.std = err.gnss_std.cwiseMax(1e-6);
        fix.valid = std::none_of(outages.begin(), outages.end(), [&](const auto& o) { return o.contains(fix.t); });
        out.push_back(fix);
    }
    return out;
}

TrajectorySpec random_drive(const RandomDriveOptions& opt, const GeodeticPosition& origin, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto grid = [](double d) { return std::max(1.0, std::ceil(d * kImuRateHz)) / kImuRateHz; };

    TrajectorySpec spec;
    spec.origin = origin;
    spec.initial_heading = uni(-3.14159, 3.14159);
    spec.segments.push_back(Stop{grid(opt.initial_stop)});

    double t = opt.initial_stop;
    double v = 0.0;
    auto ramp_to = [&](double target) {
        const double a = uni(opt.min_accel, opt.max_accel);
        const double d = grid(std::abs(target - v) / a);
        spec.segments.push_back(Straight{d, v, target});
        v = target;
        t += d;
    };

    while (t < opt.duration - 15.0) {
        if (v < 1e-9) {
            ramp_to(uni(2.0, opt.max_speed));
            continue;
        }
        const double r = uni(0.0, 1.0);
        if (r < opt.stop_probability) {
            ramp_to(0.0);
            const double d = grid(uni(4.0, 12.0));
            spec.segments.push_back(Stop{d});
            t += d;
        } else if (r < opt.stop_probability + opt.turn_probability) {
            const double max_rate = std::min(0.35, 3.0 / v);
            const double rate = uni(0.05, max_rate) * (uni(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
            const double d = grid(uni(3.0, 10.0));
            spec.segments.push_back(Turn{d, v, rate});
            t += d;
        } else if (r < 0.8) {
            const double d = grid(uni(4.0, 15.0));
            spec.segments.push_back(Straight{d, v, v});
            t += d;
        } else {
            ramp_to(uni(2.0, opt.max_speed));
        }
    }
    if (v > 0.0) ramp_to(0.0);
    spec.segments.push_back(Stop{grid(5.0)});
    return spec;
}

}  // namespace odonav

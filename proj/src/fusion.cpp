#include "odonav/fusion.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "odonav/mechanization.hpp"

namespace odonav {

std::string to_string(AidingMode m) {
    switch (m) {
        case AidingMode::NhcOnly: return "nhc";
        case AidingMode::PseudoOdo: return "pseudo";
        case AidingMode::WheelOdo: return "wheel";
    }
    return "unknown";
}

AidingMode aiding_mode_from_string(const std::string& s) {
    if (s == "nhc") return AidingMode::NhcOnly;
    if (s == "pseudo") return AidingMode::PseudoOdo;
    if (s == "wheel") return AidingMode::WheelOdo;
    throw std::invalid_argument("unknown aiding mode '" + s + "' (expected nhc, pseudo or wheel)");
}

void FusionConfig::validate() const {
    for (double s : {sigma_nhc, sigma_zupt, sigma_zaru, sigma_pseudo, sigma_wheel}) {
        if (!(s > 0.0)) throw std::invalid_argument("fusion config: every sigma must be positive");
    }
    if (!(velocity_update_rate > 0.0 && velocity_update_rate <= kImuRateHz)) {
        throw std::invalid_argument("fusion config: velocity update rate must be in (0, 50] Hz");
    }
    if (!(gnss_max_std > 0.0)) throw std::invalid_argument("fusion config: gnss_max_std must be positive");
    if (gnss_reset_after < 0) throw std::invalid_argument("fusion config: gnss_reset_after must be >= 0");
    if (!(gate.threshold > 0.0)) throw std::invalid_argument("fusion config: gate threshold must be positive");
}

InitialState initialize(const GnssSeries& gnss, const Rotation& attitude, const InitialUncertainty& u) {
    for (const auto& f : gnss) {
        if (!f.valid) continue;
        InitialState s;
        s.t = f.t;
        s.nav.pos = f.pos;
        s.nav.vel.setZero();
        s.nav.att = attitude;
        s.covariance = initial_covariance(u);
        s.covariance.block<3, 3>(kPos, kPos) = f.std.cwiseAbs2().asDiagonal();
        return s;
    }
    throw std::runtime_error("initialize: no valid GNSS fix");
}

InitialState initialize_from_truth(double t, const NavState& truth, const InitialUncertainty& u) {
    InitialState s;
    s.t = t;
    s.nav = truth;
    s.covariance = initial_covariance(u);
    return s;
}

Rotation coarse_level(const ImuSeries& imu, std::size_t n_samples, double heading) {
    if (imu.empty() || n_samples == 0) throw std::invalid_argument("coarse_level: no samples");
    n_samples = std::min(n_samples, imu.size());
    Vec3 f = Vec3::Zero();
    for (std::size_t i = 0; i < n_samples; ++i) f += imu[i].accel;
    f /= static_cast<double>(n_samples);
    // At rest f^b = C_n^b [0 0 -g].
    const double roll = std::atan2(-f.y(), -f.z());
    const double pitch = std::atan2(f.x(), std::hypot(f.y(), f.z()));
    return euler_to_rotation({roll, pitch, heading});
}

Vec3 static_gyro_bias(const ImuSeries& imu, const NavState& nav, double window) {
    if (imu.empty() || !(window > 0.0)) throw std::invalid_argument("static_gyro_bias: need samples and a window");
    Vec3 sum = Vec3::Zero();
    std::size_t n = 0;
    for (const auto& s : imu) {
        if (s.t > imu.front().t + window) break;
        sum += s.gyro;
        ++n;
    }
    return sum / static_cast<double>(n) - nav.att.transpose() * earth_rate_ned(nav.pos.lat);
}

namespace {

void log_report(std::vector<UpdateLogEntry>& log, double t, const UpdateReport& r) {
    if (r.skipped) {
        log.push_back({t, r.type, -1, std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN(), false});
        return;
    }
    for (std::size_t j = 0; j < r.components.size(); ++j) {
        const int c = r.components[j];
        const bool rejected = std::find(r.rejected.begin(), r.rejected.end(), c) != r.rejected.end();
        log.push_back({t, r.type, c, r.innovation[j], r.normalized[j], !rejected});
    }
}

ImuSample compensate(const ImuSample& s, const BiasEstimate& b) {
    return {s.t, s.gyro - b.gyro, s.accel - b.accel};
}

}  // namespace

FusionOutput run_pass(const FusionInputs& in, const FusionConfig& cfg, const InitialState& init,
                      const SpeedSeries* forward_speed) {
    cfg.validate();
    const ImuSeries& imu = in.imu;
    if (imu.size() < 2) throw std::invalid_argument("fusion: need at least two IMU samples");
    const bool odometer = cfg.mode != AidingMode::NhcOnly;
    if (cfg.velocity_updates && odometer && !forward_speed) {
        throw std::invalid_argument("fusion: odometer modes need a forward speed stream");
    }

    std::size_t k0 = 0;
    while (k0 < imu.size() && imu[k0].t < init.t - 1e-6) ++k0;
    if (k0 >= imu.size() || std::abs(imu[k0].t - init.t) > 1e-6) {
        throw std::invalid_argument("fusion: initial epoch does not match an IMU sample");
    }

    const double dt_nominal = 1.0 / kImuRateHz;
    const auto vel_every = static_cast<long>(std::llround(kImuRateHz / cfg.velocity_update_rate));
    const double sigma_fwd = cfg.mode == AidingMode::WheelOdo ? cfg.sigma_wheel : cfg.sigma_pseudo;

    ErrorStateEkf ekf(init.covariance, cfg.process_noise, cfg.gate);
    NavState nav = init.nav;
    BiasEstimate bias = init.biases;

    FusionOutput out;
    out.nav.reserve(imu.size() - k0);
    out.biases.reserve(imu.size() - k0);
    out.nav.push_back({imu[k0].t, nav});
    out.biases.push_back(bias);

    std::size_t gi = 0;
    while (gi < in.gnss.size() && in.gnss[gi].t < imu[k0].t + 0.5 * dt_nominal) ++gi;
    std::size_t si = 0;
    int gnss_streak = 0;  // consecutive fixes with a rejected component

    for (std::size_t k = k0 + 1; k < imu.size(); ++k) {
        const double t = imu[k].t;
        const ImuSample prev = compensate(imu[k - 1], bias);
        const ImuSample curr = compensate(imu[k], bias);
        nav = mechanize_step(nav, prev, curr);
        ekf.predict(nav, curr, curr.t - prev.t);

        auto apply = [&](const UpdateReport& r) {
            log_report(out.log, t, r);
            if (r.applied) ekf.feedback(nav, bias);
        };

        while (gi < in.gnss.size() && in.gnss[gi].t < t + 0.5 * dt_nominal) {
            const GnssFix& fix = in.gnss[gi++];
            if (std::abs(fix.t - t) > 0.5 * dt_nominal) continue;  // between epochs; not expected on a 50 Hz grid
            if (cfg.gnss_reset_after > 0 && gnss_streak >= cfg.gnss_reset_after) {
                const Vec3 dz = geodetic_to_local(nav.pos, fix.pos);
                StateMat p = ekf.covariance();
                for (int i = 0; i < 3; ++i) p(kPos + i, kPos + i) += dz[i] * dz[i];
                ekf.set_covariance(p);
                gnss_streak = 0;
            }
            const UpdateReport r = ekf.update_gnss_position(nav, fix, cfg.gnss_max_std);
            if (!r.skipped) gnss_streak = r.rejected.empty() ? 0 : gnss_streak + 1;
            apply(r);
        }

        const long step = static_cast<long>(k - k0);
        if (!cfg.velocity_updates || step % vel_every != 0) {
            out.nav.push_back({t, nav});
            out.biases.push_back(bias);
            continue;
        }

        std::optional<double> v_fwd;
        if (odometer) {
            while (si < forward_speed->size() && (*forward_speed)[si].t < t - 1e-6) ++si;
            if (si < forward_speed->size() && std::abs((*forward_speed)[si].t - t) <= 1e-6) v_fwd = (*forward_speed)[si].v;
        }
        const ImuSample now = compensate(imu[k], bias);
        if (v_fwd && detect_zero_velocity(*v_fwd)) {
            apply(ekf.update_zupt(nav, cfg.sigma_zupt));
            apply(ekf.update_zaru(nav, compensate(imu[k], bias), cfg.sigma_zaru));  // bias may have moved after the ZUPT
        } else if (v_fwd) {
            apply(ekf.update_vframe_velocity(nav, now, cfg.mount, *v_fwd, sigma_fwd, cfg.sigma_nhc));
        } else {
            apply(ekf.update_vframe_velocity(nav, now, cfg.mount, std::nullopt, sigma_fwd, cfg.sigma_nhc));
        }
        out.nav.push_back({t, nav});
        out.biases.push_back(bias);
    }
    return out;
}

CleaningResult run_cleaning_pass(const FusionInputs& in, const FusionConfig& cfg, const InitialState& init) {
    FusionConfig c = cfg;
    c.mode = AidingMode::NhcOnly;
    c.velocity_updates = false;
    CleaningResult r;
    r.solution = run_pass(in, c, init, nullptr);

    std::size_t k0 = in.imu.size() - r.solution.nav.size();
    std::vector<Vec3> v_body;
    std::vector<double> yaw_rate;
    v_body.reserve(r.solution.nav.size());
    yaw_rate.reserve(r.solution.nav.size());
    for (std::size_t i = 0; i < r.solution.nav.size(); ++i) {
        const NavState& n = r.solution.nav[i].nav;
        v_body.push_back(n.att.transpose() * n.vel);
        yaw_rate.push_back((n.att * (in.imu[k0 + i].gyro - r.solution.biases[i].gyro)).z());
    }
    try {
        r.mounting = estimate_mounting_angles(v_body, yaw_rate, 1.0 / kImuRateHz);
    } catch (const std::runtime_error&) {
        r.mounting.reset();
    }
    return r;
}

PseudoSpeed pseudo_odometer(const SpeedNet& model, const ImuSeries& imu, const std::vector<BiasEstimate>& biases,
                            const MountingEstimate& mount, const FusionConfig& cfg) {
    PseudoSpeed p;
    p.raw = infer_speed(model, imu, biases, mount);
    p.filtered = FirFilter::design(cfg.fir_order, cfg.fir_cutoff, kImuRateHz).apply(p.raw);
    // The network regresses a non-negative speed; keep the filtered one so too.
    for (auto& s : p.filtered) s.v = std::max(0.0, s.v);
    return p;
}

FusionOutput run(const FusionInputs& in, const FusionConfig& cfg, const InitialState& init, const SpeedNet* model,
                 bool estimate_mounting) {
    cfg.validate();
    FusionConfig c = cfg;
    std::optional<CleaningResult> cleaning;
    if (estimate_mounting || cfg.mode == AidingMode::PseudoOdo) cleaning = run_cleaning_pass(in, cfg, init);

    std::optional<MountingEstimate> estimated;
    // Too little straight driving keeps the configured mounting.
    if (estimate_mounting && cleaning->mounting) {
        estimated = cleaning->mounting;
        c.mount.angles = estimated->angles();
    }

    FusionOutput out;
    switch (cfg.mode) {
        case AidingMode::NhcOnly:
            out = run_pass(in, c, init, nullptr);
            break;
        case AidingMode::WheelOdo:
            if (in.wheel.empty()) throw std::invalid_argument("fusion: wheel mode needs a wheel speed stream");
            out = run_pass(in, c, init, &in.wheel);
            break;
        case AidingMode::PseudoOdo: {
            if (!model) throw std::invalid_argument("fusion: pseudo mode needs a trained model");
            const std::size_t k0 = in.imu.size() - cleaning->solution.biases.size();
            const ImuSeries tail(in.imu.begin() + static_cast<std::ptrdiff_t>(k0), in.imu.end());
            const MountingEstimate m{c.mount.angles.pitch, c.mount.angles.yaw};
            PseudoSpeed p = pseudo_odometer(*model, tail, cleaning->solution.biases, m, c);
            out = run_pass(in, c, init, &p.filtered);
            out.raw_speed = std::move(p.raw);
            out.filtered_speed = std::move(p.filtered);
            break;
        }
    }
    out.mounting = estimated;
    return out;
}

}  // namespace odonav

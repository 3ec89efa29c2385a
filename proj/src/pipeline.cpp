#include "odonav/pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace odonav {

ImuSeries compensate_biases(const ImuSeries& samples, const BiasEstimate& biases) {
    if (!biases.gyro.allFinite() || !biases.accel.allFinite()) throw std::invalid_argument("biases must be finite");
    ImuSeries out = samples;
    for (auto& s : out) {
        s.gyro -= biases.gyro;
        s.accel -= biases.accel;
    }
    return out;
}

ImuSeries compensate_biases(const ImuSeries& samples, const std::vector<BiasEstimate>& biases) {
    if (biases.size() != samples.size()) throw std::invalid_argument("compensate_biases: one estimate per sample");
    ImuSeries out = samples;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].gyro -= biases[i].gyro;
        out[i].accel -= biases[i].accel;
    }
    return out;
}

MountingEstimate estimate_mounting_angles(const std::vector<Vec3>& v_body, const std::vector<double>& yaw_rate,
                                          double dt, const MountingQualifier& q) {
    if (v_body.size() != yaw_rate.size()) throw std::invalid_argument("estimate_mounting_angles: length mismatch");
    if (!(dt > 0.0)) throw std::invalid_argument("estimate_mounting_angles: dt must be positive");
    Vec3 sum = Vec3::Zero();
    std::size_t n = 0;
    for (std::size_t i = 0; i < v_body.size(); ++i) {
        if (v_body[i].norm() > q.min_speed && std::abs(yaw_rate[i]) < q.max_yaw_rate) {
            sum += v_body[i];
            ++n;
        }
    }
    if (static_cast<double>(n) * dt < q.min_duration) {
        throw std::runtime_error("estimate_mounting_angles: insufficient qualifying data (" +
                                 std::to_string(static_cast<double>(n) * dt) + " s)");
    }
    const Vec3 m = sum / static_cast<double>(n);
    // v_b = C_v^b [v 0 0]^T = v [cos(p) cos(h), cos(p) sin(h), -sin(p)]
    MountingEstimate est;
    est.heading = std::atan2(m.y(), m.x());
    est.pitch = std::atan2(-m.z(), std::hypot(m.x(), m.y()));
    return est;
}

ImuSeries apply_mounting(const ImuSeries& samples, const Rotation& c_bv) {
    ImuSeries out = samples;
    for (auto& s : out) {
        s.gyro = c_bv * s.gyro;
        s.accel = c_bv * s.accel;
    }
    return out;
}

ImuSeries apply_mounting(const ImuSeries& samples, const MountingEstimate& est) {
    return apply_mounting(samples, est.config().c_bv());
}

ImuSeries clean_imu(const ImuSeries& samples, const BiasEstimate& biases, const MountingEstimate& est) {
    return apply_mounting(compensate_biases(samples, biases), est);
}

std::vector<LabeledWindow> build_windows(const ImuSeries& samples, const SpeedSeries& wheel, std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("build_windows: stride must be >= 1");
    if (samples.size() != wheel.size()) throw std::invalid_argument("build_windows: streams have different lengths");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (std::abs(samples[i].t - wheel[i].t) > 1e-6) {
            throw std::invalid_argument("build_windows: streams are not time-aligned at sample " + std::to_string(i));
        }
    }
    std::vector<LabeledWindow> out;
    for (std::size_t end = kWindowLength - 1; end < samples.size(); end += stride) {
        LabeledWindow w;
        w.input = window_at(samples, end);
        w.label = std::max(0.0, wheel[end].v);
        w.t = samples[end].t;
        w.stationary = detect_zero_velocity(w.label);
        out.push_back(std::move(w));
    }
    return out;
}

WindowInput cleaned_window(const ImuSeries& raw, std::size_t end, const BiasEstimate& bias, const Rotation& c_bv) {
    if (end + 1 < static_cast<std::size_t>(kWindowLength) || end >= raw.size()) {
        throw std::out_of_range("cleaned_window: window exceeds series");
    }
    WindowInput w;
    const std::size_t first = end + 1 - kWindowLength;
    for (int r = 0; r < kWindowLength; ++r) {
        const ImuSample& s = raw[first + static_cast<std::size_t>(r)];
        w.block<1, 3>(r, 0) = (c_bv * (s.gyro - bias.gyro)).transpose();
        w.block<1, 3>(r, 3) = (c_bv * (s.accel - bias.accel)).transpose();
    }
    return w;
}

std::vector<LabeledWindow> build_windows(const ImuSeries& raw, const std::vector<BiasEstimate>& biases,
                                         const MountingEstimate& est, const SpeedSeries& wheel, std::size_t stride) {
    if (biases.size() != raw.size()) throw std::invalid_argument("build_windows: one bias estimate per sample");
    // Validates alignment and stride; inputs are replaced below.
    std::vector<LabeledWindow> out = build_windows(raw, wheel, stride);
    const Rotation c_bv = est.config().c_bv();
    std::size_t end = kWindowLength - 1;
    for (auto& w : out) {
        w.input = cleaned_window(raw, end, biases[end], c_bv);
        end += stride;
    }
    return out;
}

SpeedSeries infer_speed(const SpeedNet& model, const ImuSeries& raw, const std::vector<BiasEstimate>& biases,
                        const MountingEstimate& est) {
    if (biases.size() != raw.size()) throw std::invalid_argument("infer_speed: one bias estimate per sample");
    if (raw.size() < static_cast<std::size_t>(kWindowLength)) throw std::invalid_argument("infer_speed: need 50 samples");
    const Rotation c_bv = est.config().c_bv();
    constexpr std::size_t kChunk = 256;
    SpeedSeries out;
    std::vector<WindowInput> windows;
    std::vector<double> stamps;
    for (std::size_t end = kWindowLength - 1; end < raw.size(); ++end) {
        windows.push_back(cleaned_window(raw, end, biases[end], c_bv));
        stamps.push_back(raw[end].t);
        if (windows.size() == kChunk || end + 1 == raw.size()) {
            const auto v = model.forward_many(windows);
            for (std::size_t i = 0; i < v.size(); ++i) out.push_back({stamps[i], v[i]});
            windows.clear();
            stamps.clear();
        }
    }
    return out;
}

}  // namespace odonav

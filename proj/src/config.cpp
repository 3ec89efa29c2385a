#include "odonav/config.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"
#include "odonav/io.hpp"

namespace odonav {

using nlohmann::ordered_json;

namespace {

ordered_json vec_json(const Vec3& v, double unit = 1.0) { return {v.x() / unit, v.y() / unit, v.z() / unit}; }

// Reads members of one JSON object and complains about anything left over.
class ObjectReader {
public:
    ObjectReader(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw std::runtime_error("config: " + path_ + " must be an object");
    }
    ~ObjectReader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& item : j_.items()) {
            if (!used_.count(item.key())) throw std::runtime_error("config: unknown key '" + qualified(item.key()) + "'");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (!j_.contains(key)) return;
        used_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw std::runtime_error("config: bad value for '" + qualified(key) + "'");
        }
    }

    void angle(const char* key, double& rad) {
        double deg = rad / kDeg;
        get(key, deg);
        rad = deg * kDeg;
    }

    void vec(const char* key, Vec3& v, double unit = 1.0) {
        if (!j_.contains(key)) return;
        std::vector<double> a;
        get(key, a);
        if (a.size() != 3) throw std::runtime_error("config: '" + qualified(key) + "' needs 3 values");
        v = Vec3(a[0], a[1], a[2]) * unit;
    }

    void euler(const char* key, EulerAngles& e) {
        Vec3 v(e.roll, e.pitch, e.yaw);
        vec(key, v, kDeg);
        e = {v.x(), v.y(), v.z()};
    }

    bool has(const char* key) const { return j_.contains(key); }
    ObjectReader child(const char* key) {
        used_.insert(key);
        return ObjectReader(j_.at(key), qualified(key));
    }

private:
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const ordered_json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::string gate_mode_name(GateMode m) { return m == GateMode::Squared ? "squared" : "literal"; }

GateMode gate_mode_from(const std::string& s) {
    if (s == "squared") return GateMode::Squared;
    if (s == "literal") return GateMode::Literal;
    throw std::runtime_error("config: gate mode must be 'squared' or 'literal'");
}

void validate(const AppConfig& c) {
    const auto& s = c.simulation;
    if (!(s.drive.duration > 20.0)) throw std::runtime_error("config: simulation.duration must exceed 20 s");
    if (!(s.drive.max_speed > 2.0 && s.drive.max_speed <= 40.0)) throw std::runtime_error("config: max_speed out of range");
    if (!(s.drive.min_accel > 0.0 && s.drive.min_accel <= s.drive.max_accel)) throw std::runtime_error("config: bad accel range");
    if (!(s.gnss_rate > 0.0)) throw std::runtime_error("config: gnss_rate must be positive");
    if (s.gyro_noise < 0.0 || s.accel_noise < 0.0 || s.wheel_noise < 0.0) throw std::runtime_error("config: noise must be >= 0");
    if (c.training_stride == 0) throw std::runtime_error("config: training.stride must be >= 1");
    if (c.training.batch_size < 1) throw std::runtime_error("config: training.batch_size must be >= 1");
    if (!(c.training.validation_fraction > 0.0 && c.training.validation_fraction < 1.0)) {
        throw std::runtime_error("config: training.validation_fraction must be in (0, 1)");
    }
    if (c.training.epochs < 0) throw std::runtime_error("config: training.epochs must be >= 0");
    architecture_by_name(c.architecture);
    c.fusion.validate();
    c.outage.validate();
}

}  // namespace

Architecture architecture_by_name(const std::string& name) {
    if (name == "odonet") return Architecture::odonet();
    if (name == "reduced") return Architecture::reduced();
    throw std::runtime_error("config: unknown architecture '" + name + "'");
}

AppConfig default_config() {
    AppConfig c;
    c.outage.start = 60.0;
    c.fusion.process_noise.gyro_arw = 1e-7;
    c.fusion.process_noise.accel_vrw = 1e-4;
    c.fusion.process_noise.gyro_bias_rw = 1e-12;
    c.fusion.process_noise.accel_bias_rw = 1e-8;
    return c;
}

std::string config_to_json(const AppConfig& c) {
    const auto& s = c.simulation;
    const auto& f = c.fusion;
    ordered_json j;
    j["simulation"] = {
        {"duration", s.drive.duration},
        {"max_speed", s.drive.max_speed},
        {"min_accel", s.drive.min_accel},
        {"max_accel", s.drive.max_accel},
        {"stop_probability", s.drive.stop_probability},
        {"turn_probability", s.drive.turn_probability},
        {"initial_stop", s.drive.initial_stop},
        {"origin", {{"lat_deg", s.origin.lat / kDeg}, {"lon_deg", s.origin.lon / kDeg}, {"h", s.origin.h}}},
        {"gyro_bias_dps", vec_json(s.gyro_bias, kDeg)},
        {"accel_bias", vec_json(s.accel_bias)},
        {"randomize_biases", s.randomize_biases},
        {"gyro_bias_range_dps", s.gyro_bias_range / kDeg},
        {"accel_bias_range", s.accel_bias_range},
        {"gyro_noise_dps", s.gyro_noise / kDeg},
        {"accel_noise", s.accel_noise},
        {"wheel_noise", s.wheel_noise},
        {"gnss_std", vec_json(s.gnss_std)},
        {"gnss_rate", s.gnss_rate},
        {"vibration",
         {{"accel_gain", vec_json(s.vibration.accel_gain)},
          {"gyro_gain", vec_json(s.vibration.gyro_gain)},
          {"wheel_radius", s.vibration.wheel_radius}}},
        {"mounting_deg", {s.mounting.roll / kDeg, s.mounting.pitch / kDeg, s.mounting.yaw / kDeg}},
        {"randomize_mounting", s.randomize_mounting},
        {"mounting_range_deg", {s.mounting_range.roll / kDeg, s.mounting_range.pitch / kDeg, s.mounting_range.yaw / kDeg}},
        {"lever_arm", vec_json(s.lever_arm)},
    };
    j["training"] = {
        {"architecture", c.architecture},
        {"learning_rate", c.training.learning_rate},
        {"batch_size", c.training.batch_size},
        {"epochs", c.training.epochs},
        {"validation_fraction", c.training.validation_fraction},
        {"beta1", c.training.beta1},
        {"beta2", c.training.beta2},
        {"epsilon", c.training.epsilon},
        {"center_output", c.training.center_output},
        {"warmup_steps", c.training.warmup_steps},
        {"stride", c.training_stride},
        {"warmup", c.training_warmup},
    };
    j["fusion"] = {
        {"sigma_nhc", f.sigma_nhc},
        {"sigma_zupt", f.sigma_zupt},
        {"sigma_zaru_dps", f.sigma_zaru / kDeg},
        {"sigma_pseudo", f.sigma_pseudo},
        {"sigma_wheel", f.sigma_wheel},
        {"velocity_update_rate", f.velocity_update_rate},
        {"gnss_max_std", f.gnss_max_std},
        {"gnss_reset_after", f.gnss_reset_after},
        {"gate", {{"mode", gate_mode_name(f.gate.mode)}, {"threshold", f.gate.threshold}, {"enabled", f.gate.enabled}}},
        {"mounting_deg", {f.mount.angles.roll / kDeg, f.mount.angles.pitch / kDeg, f.mount.angles.yaw / kDeg}},
        {"lever_arm", vec_json(f.mount.lever_arm)},
        {"estimate_mounting", c.estimate_mounting},
        {"static_bias_window", c.static_bias_window},
        {"process_noise",
         {{"gyro_arw", f.process_noise.gyro_arw},
          {"accel_vrw", f.process_noise.accel_vrw},
          {"gyro_bias_rw", f.process_noise.gyro_bias_rw},
          {"accel_bias_rw", f.process_noise.accel_bias_rw}}},
        {"initial",
         {{"pos", f.initial.pos},
          {"vel", f.initial.vel},
          {"roll_pitch_deg", f.initial.roll_pitch / kDeg},
          {"heading_deg", f.initial.heading / kDeg},
          {"gyro_bias_dps", f.initial.gyro_bias / kDeg},
          {"accel_bias", f.initial.accel_bias}}},
        {"fir_order", f.fir_order},
        {"fir_cutoff", f.fir_cutoff},
    };
    j["outage"] = {{"start", c.outage.start}, {"length", c.outage.length}, {"period", c.outage.period}};
    return j.dump(2) + "\n";
}

AppConfig config_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("config: parse error: ") + e.what());
    }
    AppConfig c = default_config();
    {
        ObjectReader root(j, "");
        if (root.has("simulation")) {
            auto r = root.child("simulation");
            auto& s = c.simulation;
            r.get("duration", s.drive.duration);
            r.get("max_speed", s.drive.max_speed);
            r.get("min_accel", s.drive.min_accel);
            r.get("max_accel", s.drive.max_accel);
            r.get("stop_probability", s.drive.stop_probability);
            r.get("turn_probability", s.drive.turn_probability);
            r.get("initial_stop", s.drive.initial_stop);
            if (r.has("origin")) {
                auto o = r.child("origin");
                o.angle("lat_deg", s.origin.lat);
                o.angle("lon_deg", s.origin.lon);
                o.get("h", s.origin.h);
            }
            r.vec("gyro_bias_dps", s.gyro_bias, kDeg);
            r.vec("accel_bias", s.accel_bias);
            r.get("randomize_biases", s.randomize_biases);
            r.angle("gyro_bias_range_dps", s.gyro_bias_range);
            r.get("accel_bias_range", s.accel_bias_range);
            r.angle("gyro_noise_dps", s.gyro_noise);
            r.get("accel_noise", s.accel_noise);
            r.get("wheel_noise", s.wheel_noise);
            r.vec("gnss_std", s.gnss_std);
            r.get("gnss_rate", s.gnss_rate);
            if (r.has("vibration")) {
                auto v = r.child("vibration");
                v.vec("accel_gain", s.vibration.accel_gain);
                v.vec("gyro_gain", s.vibration.gyro_gain);
                v.get("wheel_radius", s.vibration.wheel_radius);
            }
            r.euler("mounting_deg", s.mounting);
            r.get("randomize_mounting", s.randomize_mounting);
            r.euler("mounting_range_deg", s.mounting_range);
            r.vec("lever_arm", s.lever_arm);
        }
        if (root.has("training")) {
            auto r = root.child("training");
            r.get("architecture", c.architecture);
            r.get("learning_rate", c.training.learning_rate);
            r.get("batch_size", c.training.batch_size);
            r.get("epochs", c.training.epochs);
            r.get("validation_fraction", c.training.validation_fraction);
            r.get("beta1", c.training.beta1);
            r.get("beta2", c.training.beta2);
            r.get("epsilon", c.training.epsilon);
            r.get("center_output", c.training.center_output);
            r.get("warmup_steps", c.training.warmup_steps);
            r.get("stride", c.training_stride);
            r.get("warmup", c.training_warmup);
        }
        if (root.has("fusion")) {
            auto r = root.child("fusion");
            auto& f = c.fusion;
            r.get("sigma_nhc", f.sigma_nhc);
            r.get("sigma_zupt", f.sigma_zupt);
            r.angle("sigma_zaru_dps", f.sigma_zaru);
            r.get("sigma_pseudo", f.sigma_pseudo);
            r.get("sigma_wheel", f.sigma_wheel);
            r.get("velocity_update_rate", f.velocity_update_rate);
            r.get("gnss_max_std", f.gnss_max_std);
            r.get("gnss_reset_after", f.gnss_reset_after);
            if (r.has("gate")) {
                auto g = r.child("gate");
                std::string mode = gate_mode_name(f.gate.mode);
                g.get("mode", mode);
                f.gate.mode = gate_mode_from(mode);
                g.get("threshold", f.gate.threshold);
                g.get("enabled", f.gate.enabled);
            }
            r.euler("mounting_deg", f.mount.angles);
            r.vec("lever_arm", f.mount.lever_arm);
            r.get("estimate_mounting", c.estimate_mounting);
            r.get("static_bias_window", c.static_bias_window);
            if (r.has("process_noise")) {
                auto p = r.child("process_noise");
                p.get("gyro_arw", f.process_noise.gyro_arw);
                p.get("accel_vrw", f.process_noise.accel_vrw);
                p.get("gyro_bias_rw", f.process_noise.gyro_bias_rw);
                p.get("accel_bias_rw", f.process_noise.accel_bias_rw);
            }
            if (r.has("initial")) {
                auto u = r.child("initial");
                u.get("pos", f.initial.pos);
                u.get("vel", f.initial.vel);
                u.angle("roll_pitch_deg", f.initial.roll_pitch);
                u.angle("heading_deg", f.initial.heading);
                u.angle("gyro_bias_dps", f.initial.gyro_bias);
                u.get("accel_bias", f.initial.accel_bias);
            }
            r.get("fir_order", f.fir_order);
            r.get("fir_cutoff", f.fir_cutoff);
        }
        if (root.has("outage")) {
            auto r = root.child("outage");
            r.get("start", c.outage.start);
            r.get("length", c.outage.length);
            r.get("period", c.outage.period);
        }
    }
    validate(c);
    return c;
}

AppConfig load_config(const std::string& path) { return config_from_json(read_text(path)); }

}  // namespace odonav

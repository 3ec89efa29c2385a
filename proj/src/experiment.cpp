#include "odonav/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace odonav {

using nlohmann::ordered_json;

ScenarioData simulate_scenario(const SimulationConfig& cfg, std::uint64_t seed) {
    // Separate stream for per-scenario draws so the drive itself only depends on seed.
    std::mt19937_64 rng(seed ^ 0xa0761d6478bd642fULL);
    auto uni = [&](double r) { return std::uniform_real_distribution<double>(-r, r)(rng); };

    ScenarioData s;
    s.meta.seed = seed;
    s.meta.origin = cfg.origin;

    SensorErrorModel err;
    err.gyro_bias = cfg.gyro_bias;
    err.accel_bias = cfg.accel_bias;
    if (cfg.randomize_biases) {
        err.gyro_bias = Vec3(uni(cfg.gyro_bias_range), uni(cfg.gyro_bias_range), uni(cfg.gyro_bias_range));
        err.accel_bias = Vec3(uni(cfg.accel_bias_range), uni(cfg.accel_bias_range), uni(cfg.accel_bias_range));
    }
    err.gyro_noise = cfg.gyro_noise;
    err.accel_noise = cfg.accel_noise;
    err.wheel_noise = cfg.wheel_noise;
    err.gnss_std = cfg.gnss_std;
    err.vibration = cfg.vibration;
    err.seed = seed;

    MountingConfig mount{cfg.mounting, cfg.lever_arm};
    if (cfg.randomize_mounting) {
        mount.angles = {uni(cfg.mounting_range.roll), uni(cfg.mounting_range.pitch), uni(cfg.mounting_range.yaw)};
    }
    s.meta.mount = mount;
    s.meta.biases = {err.gyro_bias, err.accel_bias};

    const ScenarioTruth truth = generate_truth(random_drive(cfg.drive, cfg.origin, seed));
    s.imu = synthesize_imu(truth, err, mount);
    s.wheel = synthesize_wheel(truth, err, mount);
    s.speed = wheel_speed_truth(truth, mount);
    s.gnss = synthesize_gnss(truth, err, cfg.gnss_rate);
    s.truth.reserve(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        NavState n = truth.nav[k];
        n.att = imu_attitude(truth, k, mount);
        s.truth.push_back({truth.t[k], n});
    }
    s.meta.initial_attitude = s.truth.front().nav.att;
    return s;
}

namespace {

ordered_json vec_j(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
Vec3 vec_from(const ordered_json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

std::string join(const std::string& dir, const char* name) { return (std::filesystem::path(dir) / name).string(); }

}  // namespace

void write_scenario(const ScenarioData& s, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const EulerAngles a0 = rotation_to_euler(s.meta.initial_attitude);
    ordered_json meta;
    meta["seed"] = s.meta.seed;
    meta["origin"] = {s.meta.origin.lat, s.meta.origin.lon, s.meta.origin.h};
    meta["mounting_rad"] = {s.meta.mount.angles.roll, s.meta.mount.angles.pitch, s.meta.mount.angles.yaw};
    meta["lever_arm"] = vec_j(s.meta.mount.lever_arm);
    meta["gyro_bias"] = vec_j(s.meta.biases.gyro);
    meta["accel_bias"] = vec_j(s.meta.biases.accel);
    meta["initial_attitude_rad"] = {a0.roll, a0.pitch, a0.yaw};
    write_text_atomic(join(dir, "scenario.json"), meta.dump(2) + "\n");
    write_text_atomic(join(dir, "imu.csv"), format_imu_csv(s.imu));
    write_text_atomic(join(dir, "gnss.csv"), format_gnss_csv(s.gnss));
    write_text_atomic(join(dir, "wheel.csv"), format_speed_csv(s.wheel));
    write_text_atomic(join(dir, "speed_truth.csv"), format_speed_csv(s.speed));
    write_text_atomic(join(dir, "truth.csv"), format_nav_csv(s.truth));
}

ScenarioData read_scenario(const std::string& dir) {
    ScenarioData s;
    try {
        const auto meta = ordered_json::parse(read_text(join(dir, "scenario.json")));
        s.meta.seed = meta.at("seed").get<std::uint64_t>();
        const auto o = meta.at("origin");
        s.meta.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
        const Vec3 m = vec_from(meta.at("mounting_rad"));
        s.meta.mount = {{m.x(), m.y(), m.z()}, vec_from(meta.at("lever_arm"))};
        s.meta.biases = {vec_from(meta.at("gyro_bias")), vec_from(meta.at("accel_bias"))};
        const Vec3 a = vec_from(meta.at("initial_attitude_rad"));
        s.meta.initial_attitude = euler_to_rotation({a.x(), a.y(), a.z()});
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("scenario.json in " + dir + ": " + e.what());
    }
    s.imu = read_imu_csv(join(dir, "imu.csv"));
    s.gnss = read_gnss_csv(join(dir, "gnss.csv"));
    s.wheel = read_speed_csv(join(dir, "wheel.csv"));
    s.speed = read_speed_csv(join(dir, "speed_truth.csv"));
    s.truth = read_nav_csv(join(dir, "truth.csv"));
    if (s.wheel.size() != s.imu.size() || s.speed.size() != s.imu.size() || s.truth.size() != s.imu.size()) {
        throw std::runtime_error("scenario in " + dir + ": streams have different lengths");
    }
    return s;
}

GnssSeries apply_outages(const GnssSeries& gnss, const OutageSchedule& schedule) {
    schedule.validate();
    GnssSeries out = gnss;
    for (auto& f : out) {
        if (schedule.contains(f.t)) f.valid = false;
    }
    return out;
}

InitialState initial_state(const ScenarioData& s, const GnssSeries& gnss, const AppConfig& cfg) {
    InitialState init = initialize(gnss, s.meta.initial_attitude, cfg.fusion.initial);
    if (cfg.static_bias_window > 0.0) {
        ImuSeries tail;
        for (const auto& m : s.imu) {
            if (m.t >= init.t - 1e-9) tail.push_back(m);
        }
        init.biases.gyro = static_gyro_bias(tail, init.nav, cfg.static_bias_window);
    }
    return init;
}

namespace {

struct Cleaned {
    std::size_t k0 = 0;
    MountingEstimate mounting;
    std::vector<BiasEstimate> biases;
};

// strict: no fallback when the mounting cannot be estimated (training data)
Cleaned clean_scenario(const ScenarioData& s, const AppConfig& cfg, const CleaningOptions& opt, bool strict) {
    const InitialState init = initial_state(s, s.gnss, cfg);
    const CleaningResult r = run_cleaning_pass({s.imu, s.gnss, s.wheel}, cfg.fusion, init);
    Cleaned c;
    c.k0 = s.imu.size() - r.solution.nav.size();
    if (opt.apply_mounting) {
        if (r.mounting) {
            c.mounting = *r.mounting;
        } else if (strict) {
            throw std::runtime_error("scenario " + std::to_string(s.meta.seed) + ": mounting not estimable");
        } else {
            c.mounting = {cfg.fusion.mount.angles.pitch, cfg.fusion.mount.angles.yaw};
        }
    }
    c.biases = opt.compensate_biases ? r.solution.biases : std::vector<BiasEstimate>(r.solution.biases.size());
    return c;
}

template <typename T>
std::vector<T> tail_from(const std::vector<T>& v, std::size_t k0) {
    return std::vector<T>(v.begin() + static_cast<std::ptrdiff_t>(k0), v.end());
}

}  // namespace

PreparedData prepare_training_data(const ScenarioData& s, const AppConfig& cfg, const CleaningOptions& opt,
                                   std::size_t stride) {
    const Cleaned c = clean_scenario(s, cfg, opt, true);
    const ImuSeries imu = tail_from(s.imu, c.k0);
    const SpeedSeries wheel = tail_from(s.wheel, c.k0);
    PreparedData p;
    p.mounting = c.mounting;
    p.biases = c.biases;
    auto windows = build_windows(imu, c.biases, c.mounting, wheel, stride == 0 ? cfg.training_stride : stride);
    const double t_min = imu.front().t + cfg.training_warmup;
    for (auto& w : windows) {
        if (w.t >= t_min - 1e-9) p.windows.push_back(std::move(w));
    }
    return p;
}

PseudoSpeed infer_scenario(const SpeedNet& model, const ScenarioData& s, const AppConfig& cfg,
                           const CleaningOptions& opt) {
    const Cleaned c = clean_scenario(s, cfg, opt, false);
    return pseudo_odometer(model, tail_from(s.imu, c.k0), c.biases, c.mounting, cfg.fusion);
}

FusionOutput fuse_scenario(const ScenarioData& s, const AppConfig& cfg, AidingMode mode,
                           const std::optional<OutageSchedule>& outage, const SpeedNet* model) {
    FusionInputs in{s.imu, outage ? apply_outages(s.gnss, *outage) : s.gnss, s.wheel};
    const InitialState init = initial_state(s, in.gnss, cfg);
    FusionConfig fc = cfg.fusion;
    fc.mode = mode;
    return run(in, fc, init, model, cfg.estimate_mounting);
}

void AlignedSpeed::append(const AlignedSpeed& o) {
    raw.insert(raw.end(), o.raw.begin(), o.raw.end());
    filtered.insert(filtered.end(), o.filtered.begin(), o.filtered.end());
    truth.insert(truth.end(), o.truth.begin(), o.truth.end());
}

AlignedSpeed align_speed(const PseudoSpeed& p, const SpeedSeries& truth) {
    if (p.raw.size() != p.filtered.size()) throw std::invalid_argument("raw and filtered speed differ in length");
    AlignedSpeed a;
    std::size_t j = 0;
    for (std::size_t i = 0; i < p.raw.size(); ++i) {
        while (j < truth.size() && truth[j].t < p.raw[i].t - 1e-6) ++j;
        if (j == truth.size() || std::abs(truth[j].t - p.raw[i].t) > 1e-6) {
            throw std::runtime_error("speed series does not match the scenario timeline");
        }
        a.raw.push_back(p.raw[i].v);
        a.filtered.push_back(p.filtered[i].v);
        a.truth.push_back(truth[j].v);
    }
    return a;
}

void score_speed(Evaluation& e, const AlignedSpeed& a) {
    std::vector<bool> pred_stop, true_stop;
    for (std::size_t i = 0; i < a.truth.size(); ++i) {
        pred_stop.push_back(detect_zero_velocity(a.filtered[i]));
        true_stop.push_back(detect_zero_velocity(a.truth[i]));
    }
    e.speed = speed_metrics(a.raw, a.truth);
    e.filtered_speed = speed_metrics(a.filtered, a.truth);
    e.detection = detection_metrics(pred_stop, true_stop);
}

// Reports

namespace {

// Published real-vehicle results, shown next to simulated numbers.
constexpr double kRefSpeedMae[6] = {0.300, 0.253, 0.294, 0.397, 1.070, 0.315};
constexpr double kRefSpeedRmse[6] = {0.534, 0.391, 0.419, 0.520, 1.337, 0.490};
constexpr double kRefPrecision = 0.9533;
constexpr double kRefRecall = 0.9905;
struct RefOutageRow {
    const char* module;
    const char* aiding;
    double seq[3];
    double rms;
};
constexpr RefOutageRow kRefOutage[] = {
    {"M1", "nhc", {15.624, 8.974, 10.669}, 12.090},    {"M1", "pseudo", {5.151, 3.024, 3.713}, 4.061},
    {"M1", "wheel", {4.018, 2.273, 2.780}, 3.111},     {"M2", "nhc", {11.351, 8.572, 16.364}, 12.518},
    {"M2", "pseudo", {3.567, 3.894, 4.005}, 3.827},    {"M2", "wheel", {3.367, 2.752, 3.359}, 3.172},
};
constexpr const char* kRefNote = "published real-vehicle results; different data, not comparable";

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

ordered_json speed_json(const SpeedMetrics& m) {
    ordered_json bins = ordered_json::array();
    for (const auto& b : m.bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"mae", b.mae}, {"rmse", b.rmse}});
    ordered_json cdf = ordered_json::array();
    for (const auto& [x, p] : m.cdf) cdf.push_back({x, p});
    return {{"bins", bins},
            {"overall", {{"count", m.overall.count}, {"mae", m.overall.mae}, {"rmse", m.overall.rmse}}},
            {"cdf", cdf}};
}

SpeedBin bin_from(const ordered_json& j) {
    SpeedBin b;
    b.lo = j.value("lo", 0.0);
    b.hi = j.value("hi", 25.0);
    b.count = j.at("count").get<std::size_t>();
    b.mae = j.at("mae").get<double>();
    b.rmse = j.at("rmse").get<double>();
    return b;
}

SpeedMetrics speed_from(const ordered_json& j) {
    SpeedMetrics m;
    for (const auto& b : j.at("bins")) m.bins.push_back(bin_from(b));
    m.overall = bin_from(j.at("overall"));
    for (const auto& p : j.at("cdf")) m.cdf.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return m;
}

void speed_text(std::ostringstream& os, const std::string& prefix, const SpeedMetrics& m) {
    for (const auto& b : m.bins) {
        const std::string key = prefix + ".bin_" + fmt(b.lo, 0) + "_" + fmt(b.hi, 0);
        os << key << ".count = " << b.count << "\n";
        os << key << ".mae = " << fmt(b.mae) << "\n";
        os << key << ".rmse = " << fmt(b.rmse) << "\n";
    }
    os << prefix << ".overall.count = " << m.overall.count << "\n";
    os << prefix << ".overall.mae = " << fmt(m.overall.mae) << "\n";
    os << prefix << ".overall.rmse = " << fmt(m.overall.rmse) << "\n";
    for (double p : {0.5, 0.9, 0.99}) {
        const auto it = std::find_if(m.cdf.begin(), m.cdf.end(), [p](const auto& c) { return c.second >= p; });
        if (it != m.cdf.end()) os << prefix << ".cdf_p" << fmt(p * 100, 0) << " = " << fmt(it->first, 3) << "\n";
    }
}

}  // namespace

std::string evaluation_to_text(const Evaluation& e) {
    std::ostringstream os;
    os << "mode = " << e.mode << "\n";
    if (e.schedule) {
        os << "outage.start = " << fmt(e.schedule->start, 3) << "\n";
        os << "outage.length = " << fmt(e.schedule->length, 3) << "\n";
        os << "outage.period = " << fmt(e.schedule->period, 3) << "\n";
    }
    if (e.outage) {
        os << "outage.count = " << e.outage->windows.size() << "\n";
        for (std::size_t i = 0; i < e.outage->windows.size(); ++i) {
            os << "outage." << i << ".window = " << fmt(e.outage->windows[i].first, 3) << " "
               << fmt(e.outage->windows[i].second, 3) << "\n";
            os << "outage." << i << ".max_horizontal_error = " << fmt(e.outage->max_horizontal_error[i]) << "\n";
        }
        os << "outage.rms = " << fmt(e.outage->rms) << "\n";
    }
    if (e.speed) speed_text(os, "speed.raw", *e.speed);
    if (e.filtered_speed) speed_text(os, "speed.filtered", *e.filtered_speed);
    if (e.detection) {
        const auto& d = *e.detection;
        os << "zero_velocity.tp = " << d.tp << "\nzero_velocity.fp = " << d.fp << "\nzero_velocity.fn = " << d.fn
           << "\nzero_velocity.tn = " << d.tn << "\n";
        os << "zero_velocity.precision = " << (d.precision ? fmt(*d.precision) : "n/a") << "\n";
        os << "zero_velocity.recall = " << (d.recall ? fmt(*d.recall) : "n/a") << "\n";
    }
    if (e.speed || e.detection) {
        os << "reference.note = " << kRefNote << "\n";
        if (e.speed) {
            os << "reference.speed.overall.mae = " << fmt(kRefSpeedMae[5], 3) << "\n";
            os << "reference.speed.overall.rmse = " << fmt(kRefSpeedRmse[5], 3) << "\n";
        }
        if (e.detection) {
            os << "reference.zero_velocity.precision = " << fmt(kRefPrecision) << "\n";
            os << "reference.zero_velocity.recall = " << fmt(kRefRecall) << "\n";
        }
    }
    return os.str();
}

std::string evaluation_to_json(const Evaluation& e) {
    ordered_json j;
    j["mode"] = e.mode;
    if (e.schedule) j["schedule"] = {{"start", e.schedule->start}, {"length", e.schedule->length}, {"period", e.schedule->period}};
    if (e.outage) {
        ordered_json windows = ordered_json::array();
        for (const auto& [a, b] : e.outage->windows) windows.push_back({a, b});
        j["outage"] = {{"windows", windows}, {"max_horizontal_error", e.outage->max_horizontal_error}, {"rms", e.outage->rms}};
    }
    if (e.speed) j["speed_raw"] = speed_json(*e.speed);
    if (e.filtered_speed) j["speed_filtered"] = speed_json(*e.filtered_speed);
    if (e.detection) {
        const auto& d = *e.detection;
        j["zero_velocity"] = {{"tp", d.tp}, {"fp", d.fp}, {"fn", d.fn}, {"tn", d.tn},
                              {"precision", d.precision ? ordered_json(*d.precision) : ordered_json(nullptr)},
                              {"recall", d.recall ? ordered_json(*d.recall) : ordered_json(nullptr)}};
    }
    ordered_json ref;
    ref["note"] = kRefNote;
    ref["speed_overall"] = {{"mae", kRefSpeedMae[5]}, {"rmse", kRefSpeedRmse[5]}};
    ref["zero_velocity"] = {{"precision", kRefPrecision}, {"recall", kRefRecall}};
    j["reference"] = ref;
    return j.dump(2) + "\n";
}

Evaluation evaluation_from_json(const std::string& text) {
    try {
        const auto j = ordered_json::parse(text);
        Evaluation e;
        e.mode = j.at("mode").get<std::string>();
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            e.schedule = OutageSchedule{s.at("start").get<double>(), s.at("length").get<double>(), s.at("period").get<double>()};
        }
        if (j.contains("outage")) {
            OutageEvaluation o;
            for (const auto& w : j.at("outage").at("windows")) o.windows.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
            o.max_horizontal_error = j.at("outage").at("max_horizontal_error").get<std::vector<double>>();
            o.rms = j.at("outage").at("rms").get<double>();
            e.outage = o;
        }
        if (j.contains("speed_raw")) e.speed = speed_from(j.at("speed_raw"));
        if (j.contains("speed_filtered")) e.filtered_speed = speed_from(j.at("speed_filtered"));
        if (j.contains("zero_velocity")) {
            const auto& z = j.at("zero_velocity");
            DetectionMetrics d;
            d.tp = z.at("tp").get<std::size_t>();
            d.fp = z.at("fp").get<std::size_t>();
            d.fn = z.at("fn").get<std::size_t>();
            d.tn = z.at("tn").get<std::size_t>();
            if (!z.at("precision").is_null()) d.precision = z.at("precision").get<double>();
            if (!z.at("recall").is_null()) d.recall = z.at("recall").get<double>();
            e.detection = d;
        }
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error(std::string("evaluation document: ") + ex.what());
    }
}

namespace {

struct ReportTable {
    std::vector<double> starts;                              // one column per outage sequence
    std::vector<std::string> modes;                          // rows, nhc / pseudo / wheel order
    std::map<std::string, std::map<double, double>> cells;   // mode -> start -> RMS
};

ReportTable build_table(const std::vector<Evaluation>& evaluations) {
    ReportTable t;
    for (const auto& e : evaluations) {
        if (!e.outage || !e.schedule) throw std::runtime_error("report: evaluation of mode '" + e.mode + "' has no outage results");
        auto& row = t.cells[e.mode];
        if (row.count(e.schedule->start)) {
            throw std::runtime_error("report: duplicate sequence for mode '" + e.mode + "'");
        }
        row[e.schedule->start] = e.outage->rms;
        if (std::find(t.starts.begin(), t.starts.end(), e.schedule->start) == t.starts.end()) t.starts.push_back(e.schedule->start);
    }
    std::sort(t.starts.begin(), t.starts.end());
    for (const char* m : {"nhc", "pseudo", "wheel"}) {
        if (t.cells.count(m)) t.modes.push_back(m);
    }
    for (const auto& [m, row] : t.cells) {
        if (std::find(t.modes.begin(), t.modes.end(), m) == t.modes.end()) t.modes.push_back(m);
        if (row.size() != t.starts.size()) throw std::runtime_error("report: mode '" + m + "' is missing a sequence");
    }
    return t;
}

double row_rms(const std::map<double, double>& row) {
    std::vector<double> v;
    for (const auto& [s, r] : row) v.push_back(r);
    return rms(v);
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

std::string format_outage_report(const std::vector<Evaluation>& evaluations) {
    const ReportTable t = build_table(evaluations);
    std::ostringstream os;
    os << "RMS of per-outage maximum horizontal error (simulated)\n\n";
    os << pad("Aiding", 10);
    for (std::size_t i = 0; i < t.starts.size(); ++i) os << pad("Seq. " + std::to_string(i + 1) + " [m]", 14);
    os << "RMS [m]\n";
    const double nhc = t.cells.count("nhc") ? row_rms(t.cells.at("nhc")) : 0.0;
    for (const auto& m : t.modes) {
        const auto& row = t.cells.at(m);
        os << pad(m, 10);
        for (double s : t.starts) os << pad(fmt(row.at(s), 3), 14);
        const double r = row_rms(row);
        os << fmt(r, 3);
        if (m != "nhc" && nhc > 0.0) os << "  (" << fmt(100.0 * (1.0 - r / nhc), 1) << "% below nhc)";
        os << "\n";
    }
    os << "\nSequence start offsets [s]:";
    for (double s : t.starts) os << " " << fmt(s, 1);
    os << "\n\nReference (" << kRefNote << ")\n";
    os << pad("Module", 8) << pad("Aiding", 10) << pad("Seq. 1 [m]", 12) << pad("Seq. 2 [m]", 12) << pad("Seq. 3 [m]", 12)
       << "RMS [m]\n";
    for (const auto& r : kRefOutage) {
        os << pad(r.module, 8) << pad(r.aiding, 10) << pad(fmt(r.seq[0], 3), 12) << pad(fmt(r.seq[1], 3), 12)
           << pad(fmt(r.seq[2], 3), 12) << fmt(r.rms, 3) << "\n";
    }
    return os.str();
}

std::string outage_report_json(const std::vector<Evaluation>& evaluations) {
    const ReportTable t = build_table(evaluations);
    ordered_json j;
    j["sequence_starts"] = t.starts;
    ordered_json rows = ordered_json::array();
    for (const auto& m : t.modes) {
        const auto& row = t.cells.at(m);
        std::vector<double> seq;
        for (double s : t.starts) seq.push_back(row.at(s));
        rows.push_back({{"mode", m}, {"sequences", seq}, {"rms", row_rms(row)}});
    }
    j["rows"] = rows;
    ordered_json ref = ordered_json::array();
    for (const auto& r : kRefOutage) {
        ref.push_back({{"module", r.module}, {"mode", r.aiding}, {"sequences", {r.seq[0], r.seq[1], r.seq[2]}}, {"rms", r.rms}});
    }
    j["reference"] = {{"note", kRefNote}, {"rows", ref}};
    return j.dump(2) + "\n";
}

}  // namespace odonav

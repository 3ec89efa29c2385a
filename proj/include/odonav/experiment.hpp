#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odonav/config.hpp"
#include "odonav/fusion.hpp"
#include "odonav/metrics.hpp"

namespace odonav {

struct ScenarioMeta {
    std::uint64_t seed = 0;
    MountingConfig mount;        // true mounting
    BiasEstimate biases;         // injected sensor biases
    GeodeticPosition origin;
    Rotation initial_attitude = Rotation::Identity();  // IMU C_b^n at the first epoch (alignment result)
};

struct ScenarioData {
    ScenarioMeta meta;
    ImuSeries imu;          // b-frame
    GnssSeries gnss;        // all fixes valid; outages are applied at fusion time
    SpeedSeries wheel;      // odometer reading
    SpeedSeries speed;      // true forward speed of the wheel point
    NavSeries truth;        // IMU position/velocity/attitude
};

ScenarioData simulate_scenario(const SimulationConfig& cfg, std::uint64_t seed);

// Files: imu.csv, gnss.csv, wheel.csv, speed_truth.csv, truth.csv, scenario.json
void write_scenario(const ScenarioData& s, const std::string& dir);
ScenarioData read_scenario(const std::string& dir);

GnssSeries apply_outages(const GnssSeries& gnss, const OutageSchedule& schedule);

// Initial state from the first valid fix and the scenario's alignment; the
// gyro bias is seeded from the initial rest period when configured.
InitialState initial_state(const ScenarioData& s, const GnssSeries& gnss, const AppConfig& cfg);

struct CleaningOptions {
    bool compensate_biases = true;
    bool apply_mounting = true;
};

// Labeled windows for one scenario after the GNSS-only cleaning pass. Throws
// when the mounting is to be applied but too little straight driving qualifies.
struct PreparedData {
    std::vector<LabeledWindow> windows;
    MountingEstimate mounting;
    std::vector<BiasEstimate> biases;  // per epoch of the scenario
};
PreparedData prepare_training_data(const ScenarioData& s, const AppConfig& cfg, const CleaningOptions& opt = {},
                                   std::size_t stride = 0);

// Network output on a full scenario with the same cleaning as training.
// Raw and filtered speeds are aligned with imu[49..]. Falls back to the
// configured mounting when it cannot be estimated.
PseudoSpeed infer_scenario(const SpeedNet& model, const ScenarioData& s, const AppConfig& cfg,
                           const CleaningOptions& opt = {});

FusionOutput fuse_scenario(const ScenarioData& s, const AppConfig& cfg, AidingMode mode,
                           const std::optional<OutageSchedule>& outage, const SpeedNet* model);

// Metrics written by `evaluate`.
struct Evaluation {
    std::string mode;
    std::optional<OutageSchedule> schedule;
    std::optional<OutageEvaluation> outage;
    std::optional<SpeedMetrics> speed;
    std::optional<SpeedMetrics> filtered_speed;
    std::optional<DetectionMetrics> detection;
};

// Network speeds paired with the truth at the same epochs. Scenarios can be
// pooled with append().
struct AlignedSpeed {
    std::vector<double> raw, filtered, truth;

    void append(const AlignedSpeed& other);
};
// Throws unless every network epoch has a truth sample at the same time.
AlignedSpeed align_speed(const PseudoSpeed& p, const SpeedSeries& truth);

// Fills the speed and detection fields.
void score_speed(Evaluation& e, const AlignedSpeed& a);

std::string evaluation_to_text(const Evaluation& e);
std::string evaluation_to_json(const Evaluation& e);
Evaluation evaluation_from_json(const std::string& text);

// Table with one row per aiding mode and one column per outage sequence,
// followed by published reference values for context.
std::string format_outage_report(const std::vector<Evaluation>& evaluations);
std::string outage_report_json(const std::vector<Evaluation>& evaluations);

}  // namespace odonav

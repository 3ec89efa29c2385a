#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "odonav/io.hpp"
#include "odonav/sim.hpp"

namespace odonav {

double rms(const std::vector<double>& values);

struct OutageEvaluation {
    std::vector<std::pair<double, double>> windows;
    std::vector<double> max_horizontal_error;  // m, one per window
    double rms = 0.0;
};

// Horizontal error is measured in the local NED frame anchored at origin.
// fused and truth are matched by timestamp. Throws when no complete outage
// window lies inside the fused time span.
OutageEvaluation mimic_outage_eval(const NavSeries& fused, const NavSeries& truth, const OutageSchedule& schedule,
                                   const GeodeticPosition& origin);

struct SpeedBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mae = 0.0;
    double rmse = 0.0;
};

struct SpeedMetrics {
    std::vector<SpeedBin> bins;  // 0-5, 5-10, 10-15, 15-20, 20-25 m/s by truth speed
    SpeedBin overall;
    // (absolute error, cumulative fraction) on a 0.001 m/s grid up to the
    // largest error; the last fraction is 1.
    std::vector<std::pair<double, double>> cdf;
};

inline constexpr double kCdfResolution = 0.001;

SpeedMetrics speed_metrics(const std::vector<double>& predicted, const std::vector<double>& truth);

// Smallest error e with at least a fraction p of the errors <= e.
double error_quantile(std::vector<double> abs_errors, double p);

struct DetectionMetrics {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::optional<double> precision;  // empty when nothing was predicted positive
    std::optional<double> recall;     // empty when there are no positives
};

// Positive class: stationary.
DetectionMetrics detection_metrics(const std::vector<bool>& predicted, const std::vector<bool>& truth);

}  // namespace odonav

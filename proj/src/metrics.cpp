#include "odonav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odonav {

double rms(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("rms: empty input");
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s / static_cast<double>(values.size()));
}

OutageEvaluation mimic_outage_eval(const NavSeries& fused, const NavSeries& truth, const OutageSchedule& schedule,
                                   const GeodeticPosition& origin) {
    schedule.validate();
    if (fused.empty() || truth.empty()) throw std::invalid_argument("mimic_outage_eval: empty series");

    OutageEvaluation ev;
    ev.windows = schedule.windows(fused.front().t, fused.back().t);
    if (ev.windows.empty()) throw std::runtime_error("mimic_outage_eval: no outage window inside the run");

    std::size_t j = 0;
    std::vector<double> maxima(ev.windows.size(), 0.0);
    std::vector<bool> seen(ev.windows.size(), false);
    std::size_t w = 0;
    for (const auto& f : fused) {
        while (w < ev.windows.size() && f.t >= ev.windows[w].second) ++w;
        if (w == ev.windows.size()) break;
        if (f.t < ev.windows[w].first) continue;
        while (j < truth.size() && truth[j].t < f.t - 1e-6) ++j;
        if (j == truth.size() || std::abs(truth[j].t - f.t) > 1e-6) {
            throw std::invalid_argument("mimic_outage_eval: truth has no sample at t=" + std::to_string(f.t));
        }
        const Vec3 d = geodetic_to_local(f.nav.pos, origin) - geodetic_to_local(truth[j].nav.pos, origin);
        maxima[w] = std::max(maxima[w], std::hypot(d.x(), d.y()));
        seen[w] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) throw std::invalid_argument("mimic_outage_eval: outage window without fused samples");
    }
    ev.max_horizontal_error = maxima;
    ev.rms = rms(maxima);
    return ev;
}

namespace {

SpeedBin summarize(double lo, double hi, const std::vector<double>& errors) {
    SpeedBin b{lo, hi, errors.size(), 0.0, 0.0};
    if (errors.empty()) return b;
    double sa = 0.0, ss = 0.0;
    for (double e : errors) {
        sa += std::abs(e);
        ss += e * e;
    }
    b.mae = sa / static_cast<double>(errors.size());
    b.rmse = std::sqrt(ss / static_cast<double>(errors.size()));
    return b;
}

}  // namespace

SpeedMetrics speed_metrics(const std::vector<double>& predicted, const std::vector<double>& truth) {
    if (predicted.empty()) throw std::invalid_argument("speed_metrics: empty series");
    if (predicted.size() != truth.size()) throw std::invalid_argument("speed_metrics: length mismatch");

    constexpr int kBins = 5;
    constexpr double kWidth = 5.0;
    std::vector<std::vector<double>> per_bin(kBins);
    std::vector<double> all;
    all.reserve(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - truth[i];
        all.push_back(e);
        if (truth[i] < 0.0 || truth[i] > kBins * kWidth) continue;
        const int b = std::min(kBins - 1, static_cast<int>(truth[i] / kWidth));
        per_bin[static_cast<std::size_t>(b)].push_back(e);
    }

    SpeedMetrics m;
    for (int b = 0; b < kBins; ++b) m.bins.push_back(summarize(b * kWidth, (b + 1) * kWidth, per_bin[static_cast<std::size_t>(b)]));
    m.overall = summarize(0.0, kBins * kWidth, all);

    std::vector<double> abs_err(all.size());
    std::transform(all.begin(), all.end(), abs_err.begin(), [](double e) { return std::abs(e); });
    std::sort(abs_err.begin(), abs_err.end());
    const auto steps = static_cast<long>(std::ceil(abs_err.back() / kCdfResolution - 1e-9));
    std::size_t n_below = 0;
    for (long s = 0; s <= steps; ++s) {
        const double x = static_cast<double>(s) * kCdfResolution;
        while (n_below < abs_err.size() && abs_err[n_below] <= x + 1e-12) ++n_below;
        m.cdf.emplace_back(x, static_cast<double>(n_below) / static_cast<double>(abs_err.size()));
    }
    m.cdf.back().second = 1.0;
    return m;
}

double error_quantile(std::vector<double> abs_errors, double p) {
    if (abs_errors.empty()) throw std::invalid_argument("error_quantile: empty input");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("error_quantile: p must be in (0, 1]");
    std::sort(abs_errors.begin(), abs_errors.end());
    const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(abs_errors.size()) - 1e-9));
    return abs_errors[std::max<std::size_t>(idx, 1) - 1];
}

DetectionMetrics detection_metrics(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("detection_metrics: length mismatch");
    DetectionMetrics d;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] && truth[i]) ++d.tp;
        else if (predicted[i]) ++d.fp;
        else if (truth[i]) ++d.fn;
        else ++d.tn;
    }
    if (d.tp + d.fp > 0) d.precision = static_cast<double>(d.tp) / static_cast<double>(d.tp + d.fp);
    if (d.tp + d.fn > 0) d.recall = static_cast<double>(d.tp) / static_cast<double>(d.tp + d.fn);
    return d;
}

}  // namespace odonav

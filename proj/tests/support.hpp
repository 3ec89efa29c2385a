#pragma once
// Helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "odonav/speednet.hpp"

namespace odonav::testing {

struct Batch {
    RowMat x;
    std::vector<double> labels;
    int size = 0;
};

inline Batch random_batch(const Architecture& arch, int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> speed(0.0, 20.0);
    Batch b;
    b.size = size;
    b.x.resize(static_cast<Eigen::Index>(size) * arch.length, arch.channels);
    for (Eigen::Index i = 0; i < b.x.size(); ++i) b.x.data()[i] = n(rng);
    for (int i = 0; i < size; ++i) b.labels.push_back(speed(rng));
    return b;
}

// Loss on the scaled output; the dropout masks are redrawn from mask_seed on
// every call so repeated evaluations see the same mask.
inline double batch_loss(const SpeedNet& net, const Batch& b, const std::uint64_t* mask_seed,
                         ForwardCache* cache = nullptr) {
    std::mt19937_64 rng(mask_seed ? *mask_seed : 0);
    const RowMat y = net.forward_batch(b.x, b.size, mask_seed ? &rng : nullptr, cache);
    const double s = net.architecture().scale;
    double sum = 0.0;
    for (int i = 0; i < b.size; ++i) {
        const double e = y(i, 0) - s * b.labels[static_cast<std::size_t>(i)];
        sum += e * e;
    }
    return sum / b.size;
}

inline std::vector<double> analytic_gradient(const SpeedNet& net, const Batch& b, const std::uint64_t* mask_seed) {
    ForwardCache cache;
    batch_loss(net, b, mask_seed, &cache);
    const double s = net.architecture().scale;
    RowMat dout(b.size, 1);
    for (int i = 0; i < b.size; ++i) dout(i, 0) = 2.0 * (cache.output(i, 0) - s * b.labels[static_cast<std::size_t>(i)]) / b.size;
    std::vector<double> grad(net.parameter_count(), 0.0);
    net.backward_batch(cache, dout, grad);
    return grad;
}

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t nonzero = 0;
};

// Central differences with step h over every parameter. The relative error
// uses max(|a|, |n|) with a small absolute floor so exact zeros compare clean.
inline GradientCheck check_gradient(SpeedNet net, const Batch& b, const std::uint64_t* mask_seed, double h = 1e-5) {
    const std::vector<double> analytic = analytic_gradient(net, b, mask_seed);
    GradientCheck r;
    auto& p = net.parameters();
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double keep = p[j];
        p[j] = keep + h;
        const double up = batch_loss(net, b, mask_seed);
        p[j] = keep - h;
        const double down = batch_loss(net, b, mask_seed);
        p[j] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-7});
        const double rel = std::abs(analytic[j] - numeric) / scale;
        if (rel > r.max_relative_error) {
            r.max_relative_error = rel;
            r.worst_index = j;
        }
        ++r.checked;
        if (analytic[j] != 0.0) ++r.nonzero;
    }
    return r;
}

// Keeps the output unit active so every parameter receives gradient.
inline void bias_output_positive(SpeedNet& net, double value = 0.5) {
    const auto& slots = net.slots();
    for (std::size_t i = slots.size(); i-- > 0;) {
        if (slots[i].bias_size > 0) {
            net.parameters()[slots[i].bias_offset] = value;
            return;
        }
    }
}

}  // namespace odonav::testing

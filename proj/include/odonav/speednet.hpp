#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odonav/types.hpp"

namespace odonav {

inline constexpr int kWindowLength = 50;
inline constexpr int kWindowChannels = 6;

// Rows are time steps, columns [wx wy wz fx fy fz] in the v-frame.
using WindowInput = Eigen::Matrix<double, kWindowLength, kWindowChannels, Eigen::RowMajor>;

struct LabeledWindow {
    WindowInput input;
    double label = 0.0;  // m/s
    double t = 0.0;      // window end
    bool stationary = false;
};

enum class LayerType { Conv1d, MaxPool, Flatten, Dense, Relu, Dropout };

struct LayerSpec {
    LayerType type = LayerType::Relu;
    int size = 0;        // conv depth, dense units or pool size
    int kernel = 0;      // conv only; stride 1, same padding
    double rate = 0.0;   // dropout probability

    static LayerSpec conv(int depth, int kernel) { return {LayerType::Conv1d, depth, kernel, 0.0}; }
    static LayerSpec pool(int size) { return {LayerType::MaxPool, size, 0, 0.0}; }
    static LayerSpec flatten() { return {LayerType::Flatten, 0, 0, 0.0}; }
    static LayerSpec dense(int units) { return {LayerType::Dense, units, 0, 0.0}; }
    static LayerSpec relu() { return {LayerType::Relu, 0, 0, 0.0}; }
    static LayerSpec dropout(double p) { return {LayerType::Dropout, 0, 0, p}; }
};

std::string to_string(LayerType t);
LayerType layer_type_from_string(const std::string& s);

struct Architecture {
    int length = kWindowLength;
    int channels = kWindowChannels;
    std::vector<LayerSpec> layers;
    double scale = 1.0 / 30.0;

    // 4 x (conv 5, relu, pool 2) with depths 16/32/64/128, then
    // dropout, dense 256, relu, dropout, dense 64, relu, dense 1, relu.
    static Architecture odonet();
    // Small variant used for gradient checks.
    static Architecture reduced(int length = kWindowLength, int channels = kWindowChannels);
};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-batch activations kept for the backward pass.
struct ForwardCache {
    int batch = 0;
    std::vector<RowMat> inputs;          // input of each layer
    std::vector<RowMat> columns;         // im2col buffers (conv only)
    std::vector<std::vector<int>> argmax;  // pool routing
    std::vector<RowMat> masks;           // dropout masks (already scaled)
    RowMat output;                       // network output, batch x 1 (scaled speed)
};

class SpeedNet {
public:
    SpeedNet() = default;
    explicit SpeedNet(Architecture arch, std::uint64_t init_seed = 0);

    const Architecture& architecture() const { return arch_; }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    // Offsets of each layer's weights and biases inside parameters().
    struct ParamSlot {
        std::size_t weight_offset = 0;
        int weight_rows = 0;
        int weight_cols = 0;
        std::size_t bias_offset = 0;
        int bias_size = 0;
    };
    const std::vector<ParamSlot>& slots() const { return slots_; }

    // x holds batch windows stacked row-wise: (batch * length) x channels.
    // Returns the scaled network output (s * v), batch x 1. Dropout is only
    // active when rng is given.
    RowMat forward_batch(const RowMat& x, int batch, std::mt19937_64* rng, ForwardCache* cache) const;

    // Accumulates dLoss/dtheta into grad given dLoss/doutput (batch x 1).
    void backward_batch(const ForwardCache& cache, const RowMat& dout, std::vector<double>& grad) const;

    // Regressed speed in m/s; always >= 0.
    double forward(const WindowInput& window) const;
    double forward(const WindowInput& window, bool train_mode, std::mt19937_64& rng) const;
    std::vector<double> forward_many(const std::vector<WindowInput>& windows) const;

private:
    struct Shape {
        int length = 0;
        int channels = 0;
        bool flat = false;
        int features() const { return length * channels; }
    };

    void build(std::uint64_t init_seed);

    Architecture arch_;
    std::vector<double> params_;
    std::vector<ParamSlot> slots_;  // per layer; empty for parameter-free layers
    std::vector<Shape> in_shapes_;
    std::vector<Shape> out_shapes_;
};

// Mean squared error on scaled speeds.
double speed_loss(const std::vector<double>& predictions, const std::vector<double>& labels, double scale);

struct TrainConfig {
    double learning_rate = 5e-5;
    int batch_size = 1024;
    int epochs = 1000;
    double validation_fraction = 0.2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    // Shift the output bias before the first epoch so the mean pre-activation
    // on the training split equals the mean scaled label. Without it some
    // initializations put every window below the final ReLU and the network
    // never receives a gradient.
    bool center_output = true;
    // Linear learning-rate ramp over the first optimizer steps; 0 disables.
    // Full-size first Adam steps can push every window below the final ReLU.
    int warmup_steps = 0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    double initial_val_loss = 0.0;  // after output centering, before the first epoch
    std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Adam on shuffled mini-batches; dropout on for training, off for validation.
TrainResult train(SpeedNet& model, const std::vector<LabeledWindow>& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// Mean loss over data without dropout.
double evaluate_loss(const SpeedNet& model, const std::vector<LabeledWindow>& data,
                     const std::vector<std::size_t>& indices);

// Sliding windows of 50 v-frame samples, stride 1; one speed per window,
// stamped at the last sample.
SpeedSeries predict_stream(const SpeedNet& model, const ImuSeries& samples);

WindowInput window_at(const ImuSeries& samples, std::size_t end_index);

// Windowed-sinc low-pass with a Hamming window and unit DC gain.
class FirFilter {
public:
    static FirFilter design(int order = 64, double cutoff_hz = 0.1, double sample_rate_hz = kImuRateHz);

    const std::vector<double>& taps() const { return taps_; }
    int order() const { return static_cast<int>(taps_.size()) - 1; }
    double magnitude_response(double freq_hz) const;

    // Zero-phase application: output[i] is aligned with input[i] (group delay
    // of order/2 samples removed), edges padded with the end values.
    std::vector<double> apply(const std::vector<double>& x) const;
    SpeedSeries apply(const SpeedSeries& x) const;

private:
    std::vector<double> taps_;
    double sample_rate_ = kImuRateHz;
};

inline constexpr double kZeroVelocityThreshold = 0.1;  // m/s

inline bool detect_zero_velocity(double filtered_speed, double threshold = kZeroVelocityThreshold) {
    return filtered_speed < threshold;
}

// Weight file (JSON). Throws std::runtime_error on version, checksum or
// shape mismatches.
void save_model(const SpeedNet& model, const std::string& path);
SpeedNet load_model(const std::string& path);
std::string model_to_json(const SpeedNet& model);
SpeedNet model_from_json(const std::string& text);

}  // namespace odonav

#include "odonav/speednet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace odonav {

namespace {

// C[m x n] += A[m x k] * B[k x n], all row-major. Each output element is
// accumulated in ascending k, independent of m, so results do not depend
// on how windows are batched.
void gemm_acc(const double* __restrict a, int m, int k, const double* __restrict b, int n, double* __restrict c) {
    int i = 0;
    for (; i + 4 <= m; i += 4) {
        double* __restrict c0 = c + static_cast<std::ptrdiff_t>(i) * n;
        double* __restrict c1 = c0 + n;
        double* __restrict c2 = c1 + n;
        double* __restrict c3 = c2 + n;
        const double* a0 = a + static_cast<std::ptrdiff_t>(i) * k;
        const double* a1 = a0 + k;
        const double* a2 = a1 + k;
        const double* a3 = a2 + k;
        for (int p = 0; p < k; ++p) {
            const double* __restrict bp = b + static_cast<std::ptrdiff_t>(p) * n;
            const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
            for (int j = 0; j < n; ++j) {
                const double w = bp[j];
                c0[j] += v0 * w;
                c1[j] += v1 * w;
                c2[j] += v2 * w;
                c3[j] += v3 * w;
            }
        }
    }
    for (; i < m; ++i) {
        double* __restrict ci = c + static_cast<std::ptrdiff_t>(i) * n;
        const double* ai = a + static_cast<std::ptrdiff_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double* __restrict bp = b + static_cast<std::ptrdiff_t>(p) * n;
            const double v = ai[p];
            for (int j = 0; j < n; ++j) ci[j] += v * bp[j];
        }
    }
}

// G[k x n] += A[m x k]^T * D[m x n].
void gemm_at_b_acc(const double* __restrict a, int m, int k, const double* __restrict d, int n, double* __restrict g) {
    for (int r = 0; r < m; ++r) {
        const double* ar = a + static_cast<std::ptrdiff_t>(r) * k;
        const double* __restrict dr = d + static_cast<std::ptrdiff_t>(r) * n;
        for (int p = 0; p < k; ++p) {
            const double v = ar[p];
            if (v == 0.0) continue;
            double* __restrict gp = g + static_cast<std::ptrdiff_t>(p) * n;
            for (int j = 0; j < n; ++j) gp[j] += v * dr[j];
        }
    }
}

RowMat transpose_of(const double* w, int rows, int cols) {
    RowMat t(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t(j, i) = w[static_cast<std::ptrdiff_t>(i) * cols + j];
    return t;
}

RowMat im2col(const RowMat& x, int batch, int length, int channels, int kernel) {
    const int pad = (kernel - 1) / 2;
    RowMat cols = RowMat::Zero(static_cast<Eigen::Index>(batch) * length, kernel * channels);
    for (int b = 0; b < batch; ++b) {
        for (int l = 0; l < length; ++l) {
            double* dst = cols.data() + (static_cast<std::ptrdiff_t>(b) * length + l) * kernel * channels;
            for (int q = 0; q < kernel; ++q) {
                const int src = l + q - pad;
                if (src < 0 || src >= length) continue;
                const double* s = x.data() + (static_cast<std::ptrdiff_t>(b) * length + src) * channels;
                std::copy(s, s + channels, dst + q * channels);
            }
        }
    }
    return cols;
}

RowMat col2im(const RowMat& cols, int batch, int length, int channels, int kernel) {
    const int pad = (kernel - 1) / 2;
    RowMat dx = RowMat::Zero(static_cast<Eigen::Index>(batch) * length, channels);
    for (int b = 0; b < batch; ++b) {
        for (int l = 0; l < length; ++l) {
            const double* s = cols.data() + (static_cast<std::ptrdiff_t>(b) * length + l) * kernel * channels;
            for (int q = 0; q < kernel; ++q) {
                const int dst = l + q - pad;
                if (dst < 0 || dst >= length) continue;
                double* d = dx.data() + (static_cast<std::ptrdiff_t>(b) * length + dst) * channels;
                for (int c = 0; c < channels; ++c) d[c] += s[q * channels + c];
            }
        }
    }
    return dx;
}

void add_bias(RowMat& out, const double* bias) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        double* row = out.data() + r * out.cols();
        for (Eigen::Index j = 0; j < out.cols(); ++j) row[j] += bias[j];
    }
}

void column_sums_acc(const RowMat& g, double* dst) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double* row = g.data() + r * g.cols();
        for (Eigen::Index j = 0; j < g.cols(); ++j) dst[j] += row[j];
    }
}

}  // namespace

std::string to_string(LayerType t) {
    switch (t) {
        case LayerType::Conv1d: return "conv1d";
        case LayerType::MaxPool: return "maxpool";
        case LayerType::Flatten: return "flatten";
        case LayerType::Dense: return "dense";
        case LayerType::Relu: return "relu";
        case LayerType::Dropout: return "dropout";
    }
    return "unknown";
}

LayerType layer_type_from_string(const std::string& s) {
    for (auto t : {LayerType::Conv1d, LayerType::MaxPool, LayerType::Flatten, LayerType::Dense, LayerType::Relu,
                   LayerType::Dropout}) {
        if (to_string(t) == s) return t;
    }
    throw std::runtime_error("unknown layer type '" + s + "'");
}

Architecture Architecture::odonet() {
    Architecture a;
    for (int depth : {16, 32, 64, 128}) {
        a.layers.push_back(LayerSpec::conv(depth, 5));
        a.layers.push_back(LayerSpec::relu());
        a.layers.push_back(LayerSpec::pool(2));
    }
    a.layers.push_back(LayerSpec::flatten());
    a.layers.push_back(LayerSpec::dropout(0.5));
    a.layers.push_back(LayerSpec::dense(256));
    a.layers.push_back(LayerSpec::relu());
    a.layers.push_back(LayerSpec::dropout(0.5));
    a.layers.push_back(LayerSpec::dense(64));
    a.layers.push_back(LayerSpec::relu());
    a.layers.push_back(LayerSpec::dense(1));
    a.layers.push_back(LayerSpec::relu());
    return a;
}

Architecture Architecture::reduced(int length, int channels) {
    Architecture a;
    a.length = length;
    a.channels = channels;
    a.layers = {LayerSpec::conv(4, 5), LayerSpec::relu(), LayerSpec::pool(2),
                LayerSpec::conv(8, 5), LayerSpec::relu(), LayerSpec::pool(2),
                LayerSpec::flatten(), LayerSpec::dense(16), LayerSpec::relu(),
                LayerSpec::dense(1), LayerSpec::relu()};
    return a;
}

SpeedNet::SpeedNet(Architecture arch, std::uint64_t init_seed) : arch_(std::move(arch)) { build(init_seed); }

void SpeedNet::build(std::uint64_t init_seed) {
    if (arch_.length <= 0 || arch_.channels <= 0) throw std::invalid_argument("architecture: bad input shape");
    if (!(arch_.scale > 0.0)) throw std::invalid_argument("architecture: scale must be positive");
    if (arch_.layers.empty() || arch_.layers.back().type != LayerType::Relu) {
        throw std::invalid_argument("architecture: final layer must be relu");
    }

    Shape s{arch_.length, arch_.channels, false};
    std::size_t total = 0;
    slots_.assign(arch_.layers.size(), {});
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& l = arch_.layers[i];
        in_shapes_.push_back(s);
        switch (l.type) {
            case LayerType::Conv1d: {
                if (s.flat) throw std::invalid_argument("architecture: conv1d after flatten");
                if (l.size <= 0 || l.kernel <= 0) throw std::invalid_argument("architecture: bad conv1d");
                slots_[i] = {total, l.kernel * s.channels, l.size, 0, l.size};
                s.channels = l.size;
                break;
            }
            case LayerType::MaxPool:
                if (s.flat || l.size <= 0) throw std::invalid_argument("architecture: bad maxpool");
                s.length = (s.length + l.size - 1) / l.size;
                break;
            case LayerType::Flatten:
                s = Shape{1, s.features(), true};
                break;
            case LayerType::Dense:
                if (!s.flat || l.size <= 0) throw std::invalid_argument("architecture: dense needs flat input");
                slots_[i] = {total, s.channels, l.size, 0, l.size};
                s.channels = l.size;
                break;
            case LayerType::Relu:
                break;
            case LayerType::Dropout:
                if (!(l.rate >= 0.0 && l.rate < 1.0)) throw std::invalid_argument("architecture: bad dropout rate");
                break;
        }
        auto& slot = slots_[i];
        if (slot.weight_rows > 0) {
            slot.weight_offset = total;
            total += static_cast<std::size_t>(slot.weight_rows) * slot.weight_cols;
            slot.bias_offset = total;
            total += static_cast<std::size_t>(slot.bias_size);
        }
        out_shapes_.push_back(s);
    }
    if (!s.flat || s.channels != 1) throw std::invalid_argument("architecture: output must be a single scalar");

    // Glorot-uniform weights, zero biases.
    params_.assign(total, 0.0);
    std::mt19937_64 rng(init_seed);
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
        const auto& slot = slots_[i];
        if (slot.weight_rows == 0) continue;
        double fan_in = slot.weight_rows, fan_out = slot.weight_cols;
        if (arch_.layers[i].type == LayerType::Conv1d) fan_out *= arch_.layers[i].kernel;
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> uni(-limit, limit);
        const auto n = static_cast<std::size_t>(slot.weight_rows) * slot.weight_cols;
        for (std::size_t j = 0; j < n; ++j) params_[slot.weight_offset + j] = uni(rng);
    }
}

RowMat SpeedNet::forward_batch(const RowMat& x, int batch, std::mt19937_64* rng, ForwardCache* cache) const {
    if (x.rows() != static_cast<Eigen::Index>(batch) * arch_.length || x.cols() != arch_.channels) {
        throw std::invalid_argument("forward: input shape does not match architecture");
    }
    const std::size_t n_layers = arch_.layers.size();
    if (cache) {
        cache->batch = batch;
        cache->inputs.assign(n_layers, {});
        cache->columns.assign(n_layers, {});
        cache->argmax.assign(n_layers, {});
        cache->masks.assign(n_layers, {});
    }

    RowMat cur = x;
    for (std::size_t i = 0; i < n_layers; ++i) {
        const LayerSpec& l = arch_.layers[i];
        const Shape& in = in_shapes_[i];
        const Shape& out = out_shapes_[i];
        const auto& slot = slots_[i];
        if (cache && l.type != LayerType::Conv1d) cache->inputs[i] = cur;

        switch (l.type) {
            case LayerType::Conv1d: {
                RowMat cols = im2col(cur, batch, in.length, in.channels, l.kernel);
                RowMat y = RowMat::Zero(cols.rows(), out.channels);
                gemm_acc(cols.data(), static_cast<int>(cols.rows()), static_cast<int>(cols.cols()),
                         params_.data() + slot.weight_offset, out.channels, y.data());
                add_bias(y, params_.data() + slot.bias_offset);
                if (cache) cache->columns[i] = std::move(cols);
                cur = std::move(y);
                break;
            }
            case LayerType::MaxPool: {
                RowMat y(static_cast<Eigen::Index>(batch) * out.length, in.channels);
                std::vector<int> routes(static_cast<std::size_t>(y.size()));
                for (int b = 0; b < batch; ++b) {
                    for (int lo = 0; lo < out.length; ++lo) {
                        for (int c = 0; c < in.channels; ++c) {
                            int best = b * in.length + lo * l.size;
                            for (int q = 1; q < l.size; ++q) {
                                const int li = lo * l.size + q;
                                if (li >= in.length) break;
                                if (cur(b * in.length + li, c) > cur(best, c)) best = b * in.length + li;
                            }
                            const int row = b * out.length + lo;
                            y(row, c) = cur(best, c);
                            routes[static_cast<std::size_t>(row) * in.channels + c] = best;
                        }
                    }
                }
                if (cache) cache->argmax[i] = std::move(routes);
                cur = std::move(y);
                break;
            }
            case LayerType::Flatten: {
                RowMat y = Eigen::Map<const RowMat>(cur.data(), batch, in.features());
                cur = std::move(y);
                break;
            }
            case LayerType::Dense: {
                RowMat y = RowMat::Zero(batch, out.channels);
                gemm_acc(cur.data(), batch, in.channels, params_.data() + slot.weight_offset, out.channels, y.data());
                add_bias(y, params_.data() + slot.bias_offset);
                cur = std::move(y);
                break;
            }
            case LayerType::Relu:
                cur = cur.cwiseMax(0.0);
                break;
            case LayerType::Dropout: {
                if (!rng || l.rate == 0.0) break;
                std::bernoulli_distribution keep(1.0 - l.rate);
                const double scale = 1.0 / (1.0 - l.rate);
                RowMat mask(cur.rows(), cur.cols());
                for (Eigen::Index j = 0; j < mask.size(); ++j) mask.data()[j] = keep(*rng) ? scale : 0.0;
                cur = cur.cwiseProduct(mask);
                if (cache) cache->masks[i] = std::move(mask);
                break;
            }
        }
    }
    if (cache) cache->output = cur;
    return cur;
}

void SpeedNet::backward_batch(const ForwardCache& cache, const RowMat& dout, std::vector<double>& grad) const {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    const int batch = cache.batch;
    RowMat g = dout;
    for (std::size_t ii = arch_.layers.size(); ii-- > 0;) {
        const LayerSpec& l = arch_.layers[ii];
        const Shape& in = in_shapes_[ii];
        const Shape& out = out_shapes_[ii];
        const auto& slot = slots_[ii];
        const bool need_input_grad = ii > 0;

        switch (l.type) {
            case LayerType::Relu: {
                const RowMat& x = cache.inputs[ii];
                for (Eigen::Index j = 0; j < g.size(); ++j)
                    if (!(x.data()[j] > 0.0)) g.data()[j] = 0.0;
                break;
            }
            case LayerType::Dropout:
                if (cache.masks[ii].size() > 0) g = g.cwiseProduct(cache.masks[ii]);
                break;
            case LayerType::Dense: {
                const RowMat& x = cache.inputs[ii];
                gemm_at_b_acc(x.data(), batch, in.channels, g.data(), out.channels, grad.data() + slot.weight_offset);
                column_sums_acc(g, grad.data() + slot.bias_offset);
                if (need_input_grad) {
                    const RowMat wt = transpose_of(params_.data() + slot.weight_offset, in.channels, out.channels);
                    RowMat dx = RowMat::Zero(batch, in.channels);
                    gemm_acc(g.data(), batch, out.channels, wt.data(), in.channels, dx.data());
                    g = std::move(dx);
                }
                break;
            }
            case LayerType::Flatten: {
                RowMat dx = Eigen::Map<const RowMat>(g.data(), static_cast<Eigen::Index>(batch) * in.length, in.channels);
                g = std::move(dx);
                break;
            }
            case LayerType::MaxPool: {
                RowMat dx = RowMat::Zero(static_cast<Eigen::Index>(batch) * in.length, in.channels);
                const auto& routes = cache.argmax[ii];
                for (Eigen::Index row = 0; row < g.rows(); ++row)
                    for (int c = 0; c < in.channels; ++c)
                        dx(routes[static_cast<std::size_t>(row) * in.channels + c], c) += g(row, c);
                g = std::move(dx);
                break;
            }
            case LayerType::Conv1d: {
                const RowMat& cols = cache.columns[ii];
                const int rows = static_cast<int>(cols.rows());
                const int depth = l.kernel * in.channels;
                gemm_at_b_acc(cols.data(), rows, depth, g.data(), out.channels, grad.data() + slot.weight_offset);
                column_sums_acc(g, grad.data() + slot.bias_offset);
                if (need_input_grad) {
                    const RowMat wt = transpose_of(params_.data() + slot.weight_offset, depth, out.channels);
                    RowMat dcols = RowMat::Zero(rows, depth);
                    gemm_acc(g.data(), rows, out.channels, wt.data(), depth, dcols.data());
                    g = col2im(dcols, batch, in.length, in.channels, l.kernel);
                }
                break;
            }
        }
    }
}

double SpeedNet::forward(const WindowInput& window) const {
    if (arch_.length != kWindowLength || arch_.channels != kWindowChannels) {
        throw std::invalid_argument("forward: window shape does not match architecture");
    }
    const RowMat x = window;
    return forward_batch(x, 1, nullptr, nullptr)(0, 0) / arch_.scale;
}

double SpeedNet::forward(const WindowInput& window, bool train_mode, std::mt19937_64& rng) const {
    if (arch_.length != kWindowLength || arch_.channels != kWindowChannels) {
        throw std::invalid_argument("forward: window shape does not match architecture");
    }
    const RowMat x = window;
    return forward_batch(x, 1, train_mode ? &rng : nullptr, nullptr)(0, 0) / arch_.scale;
}

std::vector<double> SpeedNet::forward_many(const std::vector<WindowInput>& windows) const {
    constexpr std::size_t kChunk = 256;
    std::vector<double> out;
    out.reserve(windows.size());
    RowMat x;
    for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
        const std::size_t n = std::min(kChunk, windows.size() - begin);
        x.resize(static_cast<Eigen::Index>(n) * kWindowLength, kWindowChannels);
        for (std::size_t i = 0; i < n; ++i) x.middleRows(static_cast<Eigen::Index>(i) * kWindowLength, kWindowLength) = windows[begin + i];
        const RowMat y = forward_batch(x, static_cast<int>(n), nullptr, nullptr);
        for (std::size_t i = 0; i < n; ++i) out.push_back(y(static_cast<Eigen::Index>(i), 0) / arch_.scale);
    }
    return out;
}

double speed_loss(const std::vector<double>& predictions, const std::vector<double>& labels, double scale) {
    if (predictions.empty()) throw std::invalid_argument("speed_loss: empty batch");
    if (predictions.size() != labels.size()) throw std::invalid_argument("speed_loss: length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = scale * labels[i] - scale * predictions[i];
        sum += e * e;
    }
    return sum / static_cast<double>(predictions.size());
}

namespace {

RowMat stack_inputs(const std::vector<LabeledWindow>& data, const std::size_t* idx, std::size_t n) {
    RowMat x(static_cast<Eigen::Index>(n) * kWindowLength, kWindowChannels);
    for (std::size_t i = 0; i < n; ++i)
        x.middleRows(static_cast<Eigen::Index>(i) * kWindowLength, kWindowLength) = data[idx[i]].input;
    return x;
}

}  // namespace

double evaluate_loss(const SpeedNet& model, const std::vector<LabeledWindow>& data,
                     const std::vector<std::size_t>& indices) {
    if (indices.empty()) return std::nan("");
    const double s = model.architecture().scale;
    constexpr std::size_t kChunk = 256;
    double sum = 0.0;
    for (std::size_t begin = 0; begin < indices.size(); begin += kChunk) {
        const std::size_t n = std::min(kChunk, indices.size() - begin);
        const RowMat y = model.forward_batch(stack_inputs(data, indices.data() + begin, n), static_cast<int>(n),
                                             nullptr, nullptr);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = s * std::max(0.0, data[indices[begin + i]].label) - y(static_cast<Eigen::Index>(i), 0);
            sum += e * e;
        }
    }
    return sum / static_cast<double>(indices.size());
}

namespace {

void center_output(SpeedNet& model, const std::vector<LabeledWindow>& data, const std::vector<std::size_t>& idx) {
    const auto& layers = model.architecture().layers;
    if (layers.size() < 2 || layers.back().type != LayerType::Relu || layers[layers.size() - 2].type != LayerType::Dense) {
        return;
    }
    const auto& slot = model.slots()[layers.size() - 2];
    if (slot.bias_size != 1) return;

    constexpr std::size_t kChunk = 256;
    ForwardCache cache;
    double pre = 0.0, target = 0.0;
    for (std::size_t begin = 0; begin < idx.size(); begin += kChunk) {
        const std::size_t n = std::min(kChunk, idx.size() - begin);
        model.forward_batch(stack_inputs(data, idx.data() + begin, n), static_cast<int>(n), nullptr, &cache);
        const RowMat& z = cache.inputs.back();
        for (std::size_t i = 0; i < n; ++i) {
            pre += z(static_cast<Eigen::Index>(i), 0);
            target += std::max(0.0, data[idx[begin + i]].label);
        }
    }
    const double count = static_cast<double>(idx.size());
    model.parameters()[slot.bias_offset] += model.architecture().scale * target / count - pre / count;
}

}  // namespace

TrainResult train(SpeedNet& model, const std::vector<LabeledWindow>& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
        throw std::invalid_argument("train: validation fraction must be in (0, 1)");
    }
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
    if (cfg.warmup_steps < 0) throw std::invalid_argument("train: warmup steps must be >= 0");

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    TrainResult result;
    result.n_val = static_cast<std::size_t>(std::llround(static_cast<double>(data.size()) * cfg.validation_fraction));
    result.n_val = std::min(result.n_val, data.size() - 1);
    result.n_train = data.size() - result.n_val;
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(result.n_train));
    const std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(result.n_train), order.end());

    if (cfg.center_output) center_output(model, data, train_idx);
    result.initial_val_loss = evaluate_loss(model, data, val_idx);

    const double s = model.architecture().scale;
    auto& theta = model.parameters();
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad(theta.size(), 0.0);
    double beta1_t = 1.0, beta2_t = 1.0;
    long step = 0;
    ForwardCache cache;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < train_idx.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t n = std::min(static_cast<std::size_t>(cfg.batch_size), train_idx.size() - begin);
            const RowMat x = stack_inputs(data, train_idx.data() + begin, n);
            const RowMat y = model.forward_batch(x, static_cast<int>(n), &rng, &cache);

            RowMat dout(static_cast<Eigen::Index>(n), 1);
            for (std::size_t i = 0; i < n; ++i) {
                const double e = y(static_cast<Eigen::Index>(i), 0) - s * std::max(0.0, data[train_idx[begin + i]].label);
                loss_sum += e * e;
                dout(static_cast<Eigen::Index>(i), 0) = 2.0 * e / static_cast<double>(n);
            }
            std::fill(grad.begin(), grad.end(), 0.0);
            model.backward_batch(cache, dout, grad);

            beta1_t *= cfg.beta1;
            beta2_t *= cfg.beta2;
            ++step;
            const double lr = cfg.warmup_steps > 0
                                  ? cfg.learning_rate * std::min(1.0, static_cast<double>(step) / cfg.warmup_steps)
                                  : cfg.learning_rate;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
                const double mhat = m[j] / (1.0 - beta1_t);
                const double vhat = v[j] / (1.0 - beta2_t);
                theta[j] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
            }
        }
        EpochStats stats{epoch, loss_sum / static_cast<double>(train_idx.size()), evaluate_loss(model, data, val_idx)};
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

WindowInput window_at(const ImuSeries& samples, std::size_t end_index) {
    if (end_index + 1 < kWindowLength || end_index >= samples.size()) {
        throw std::out_of_range("window_at: window exceeds series");
    }
    WindowInput w;
    const std::size_t first = end_index + 1 - kWindowLength;
    for (int r = 0; r < kWindowLength; ++r) {
        const ImuSample& s = samples[first + static_cast<std::size_t>(r)];
        w.block<1, 3>(r, 0) = s.gyro.transpose();
        w.block<1, 3>(r, 3) = s.accel.transpose();
    }
    return w;
}

SpeedSeries predict_stream(const SpeedNet& model, const ImuSeries& samples) {
    if (samples.size() < static_cast<std::size_t>(kWindowLength)) {
        throw std::invalid_argument("predict_stream: need at least 50 samples");
    }
    constexpr std::size_t kChunk = 256;
    SpeedSeries out;
    out.reserve(samples.size() - kWindowLength + 1);
    std::vector<WindowInput> windows;
    for (std::size_t end = kWindowLength - 1; end < samples.size(); ++end) {
        windows.push_back(window_at(samples, end));
        if (windows.size() == kChunk || end + 1 == samples.size()) {
            const auto speeds = model.forward_many(windows);
            const std::size_t first_end = end + 1 - windows.size();
            for (std::size_t i = 0; i < speeds.size(); ++i) out.push_back({samples[first_end + i].t, speeds[i]});
            windows.clear();
        }
    }
    return out;
}

FirFilter FirFilter::design(int order, double cutoff_hz, double sample_rate_hz) {
    if (order < 2 || order % 2 != 0) throw std::invalid_argument("FIR order must be even and >= 2");
    if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz)) throw std::invalid_argument("FIR cutoff out of range");
    const double fc = cutoff_hz / sample_rate_hz;
    const int half = order / 2;
    FirFilter f;
    f.sample_rate_ = sample_rate_hz;
    f.taps_.assign(static_cast<std::size_t>(order) + 1, 0.0);
    for (int n = 0; n <= half; ++n) {
        const int m = n - half;
        const double sinc = m == 0 ? 2.0 * fc : std::sin(2.0 * M_PI * fc * m) / (M_PI * m);
        const double window = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / order);
        f.taps_[static_cast<std::size_t>(n)] = sinc * window;
        f.taps_[static_cast<std::size_t>(order - n)] = sinc * window;
    }
    // Pairwise sum keeps the normalized taps mirror-exact.
    double sum = f.taps_[static_cast<std::size_t>(half)];
    for (int n = 0; n < half; ++n) sum += 2.0 * f.taps_[static_cast<std::size_t>(n)];
    for (double& t : f.taps_) t /= sum;
    return f;
}

double FirFilter::magnitude_response(double freq_hz) const {
    const double w = 2.0 * M_PI * freq_hz / sample_rate_;
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < taps_.size(); ++k) {
        re += taps_[k] * std::cos(w * static_cast<double>(k));
        im -= taps_[k] * std::sin(w * static_cast<double>(k));
    }
    return std::hypot(re, im);
}

std::vector<double> FirFilter::apply(const std::vector<double>& x) const {
    const int order = this->order();
    if (x.size() <= static_cast<std::size_t>(order)) throw std::invalid_argument("FIR input shorter than filter order");
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const int half = order / 2;
    std::vector<double> y(x.size(), 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k <= order; ++k) {
            const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + half - k, 0, n - 1);
            acc += taps_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

SpeedSeries FirFilter::apply(const SpeedSeries& x) const {
    std::vector<double> v(x.size());
    std::transform(x.begin(), x.end(), v.begin(), [](const SpeedSample& s) { return s.v; });
    const auto y = apply(v);
    SpeedSeries out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = {x[i].t, y[i]};
    return out;
}

}  // namespace odonav

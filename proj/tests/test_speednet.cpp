#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"
#include "odonav/speednet.hpp"
#include "support.hpp"

using namespace odonav;
using namespace odonav::testing;

namespace {

WindowInput random_window(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    WindowInput w;
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
    return w;
}

Architecture toy_conv() {
    Architecture a;
    a.length = 5;
    a.channels = 1;
    a.layers = {LayerSpec::conv(1, 3), LayerSpec::flatten(), LayerSpec::dense(1), LayerSpec::relu()};
    return a;
}

std::vector<LabeledWindow> learnable_dataset(std::size_t n, std::uint64_t seed) {
    // speed is encoded in the mean forward specific force
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> speed(0.0, 20.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<LabeledWindow> out(n);
    for (auto& w : out) {
        w.label = speed(rng);
        for (int r = 0; r < kWindowLength; ++r) {
            for (int c = 0; c < kWindowChannels; ++c) w.input(r, c) = noise(rng);
            w.input(r, 3) += 0.1 * w.label;
            w.input(r, 5) -= 9.8;
        }
    }
    return out;
}

}  // namespace

TEST(Architecture, OdonetShapes) {
    const SpeedNet net(Architecture::odonet(), 1);
    // conv: 5*6*16+16, 5*16*32+32, 5*32*64+64, 5*64*128+128; dense 512*256+256, 256*64+64, 64+1
    const std::size_t expected = (480 + 16) + (2560 + 32) + (10240 + 64) + (40960 + 128) + (131072 + 256) +
                                 (16384 + 64) + (64 + 1);
    EXPECT_EQ(net.parameter_count(), expected);
    EXPECT_EQ(net.architecture().scale, 1.0 / 30.0);
    for (const auto& l : net.architecture().layers) {
        if (l.type == LayerType::Dropout) EXPECT_EQ(l.rate, 0.5);
    }
}

TEST(Architecture, InvalidRejected) {
    Architecture a = Architecture::reduced();
    a.layers.pop_back();
    EXPECT_THROW(SpeedNet(a, 0), std::invalid_argument);
    a = Architecture::reduced();
    a.layers.insert(a.layers.begin(), LayerSpec::dense(3));
    EXPECT_THROW(SpeedNet(a, 0), std::invalid_argument);
    a = Architecture::reduced();
    a.layers[a.layers.size() - 2] = LayerSpec::dense(2);
    EXPECT_THROW(SpeedNet(a, 0), std::invalid_argument);
}

TEST(Forward, ZeroWeightsGiveZero) {
    SpeedNet net(Architecture::odonet(), 3);
    std::fill(net.parameters().begin(), net.parameters().end(), 0.0);
    std::mt19937_64 rng(1);
    EXPECT_EQ(net.forward(random_window(rng)), 0.0);
}

TEST(Forward, ConvMatchesSlidingDotProduct) {
    SpeedNet net(toy_conv(), 0);
    auto& p = net.parameters();
    const double w[3] = {0.7, -1.3, 0.4}, bias = 0.25;
    const auto& conv = net.slots()[0];
    for (int q = 0; q < 3; ++q) p[conv.weight_offset + static_cast<std::size_t>(q)] = w[q];
    p[conv.bias_offset] = bias;

    RowMat x(5, 1);
    x << 1.5, -2.0, 0.5, 3.0, -1.0;
    ForwardCache cache;
    net.forward_batch(x, 1, nullptr, &cache);
    const RowMat& y = cache.inputs[1];  // flatten input = conv output
    for (int l = 0; l < 5; ++l) {
        double ref = bias;
        for (int q = 0; q < 3; ++q) {
            const int src = l + q - 1;
            if (src >= 0 && src < 5) ref += w[q] * x(src, 0);
        }
        EXPECT_NEAR(y(l, 0), ref, 1e-12);
    }
}

TEST(Forward, MaxPoolOddLengthKeepsLastElement) {
    Architecture a;
    a.length = 5;
    a.channels = 1;
    a.layers = {LayerSpec::pool(2), LayerSpec::flatten(), LayerSpec::dense(1), LayerSpec::relu()};
    SpeedNet net(a, 0);
    RowMat x(5, 1);
    x << 1.0, 4.0, 2.0, 2.0, 7.0;
    ForwardCache cache;
    net.forward_batch(x, 1, nullptr, &cache);
    const RowMat& pooled = cache.inputs[1];
    ASSERT_EQ(pooled.rows(), 3);
    EXPECT_EQ(pooled(0, 0), 4.0);
    EXPECT_EQ(pooled(1, 0), 2.0);
    EXPECT_EQ(pooled(2, 0), 7.0);
    EXPECT_EQ(cache.argmax[0][1], 2);  // tie goes to the lower index
}

TEST(Forward, NeverNegative) {
    std::mt19937_64 rng(4);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SpeedNet net(Architecture::reduced(), seed);
        std::normal_distribution<double> n(0.0, 2.0);
        for (double& v : net.parameters()) v = n(rng);
        for (int i = 0; i < 10; ++i) EXPECT_GE(net.forward(random_window(rng)), 0.0);
    }
}

TEST(Forward, DropoutOnlyInTrainMode) {
    SpeedNet net(Architecture::odonet(), 5);
    bias_output_positive(net, 0.3);
    std::mt19937_64 rng(2), a(7), b(8);
    const WindowInput w = random_window(rng);
    EXPECT_EQ(net.forward(w, false, a), net.forward(w));
    std::mt19937_64 c(7);
    EXPECT_EQ(net.forward(w, true, a), net.forward(w, true, c));
    EXPECT_NE(net.forward(w, true, b), net.forward(w));
}

TEST(Forward, BatchedEqualsSingle) {
    SpeedNet net(Architecture::odonet(), 9);
    bias_output_positive(net, 0.3);
    std::mt19937_64 rng(3);
    std::vector<WindowInput> ws;
    for (int i = 0; i < 300; ++i) ws.push_back(random_window(rng));
    const auto many = net.forward_many(ws);
    for (std::size_t i = 0; i < ws.size(); ++i) EXPECT_EQ(many[i], net.forward(ws[i])) << i;
}

TEST(Loss, Examples) {
    EXPECT_EQ(speed_loss({3.0, 4.0}, {3.0, 4.0}, 1.0 / 30.0), 0.0);
    EXPECT_NEAR(speed_loss({0.0}, {30.0}, 1.0 / 30.0), 1.0, 1e-15);
    EXPECT_NEAR(speed_loss({0.0, 0.0}, {0.1, 0.3}, 1.0), 0.05, 1e-15);
    EXPECT_THROW(speed_loss({}, {}, 1.0), std::invalid_argument);
}

TEST(Backward, ZeroLossZeroGradient) {
    SpeedNet net(Architecture::reduced(), 2);
    bias_output_positive(net);
    Batch b = random_batch(net.architecture(), 3, 1);
    const RowMat y = net.forward_batch(b.x, b.size, nullptr, nullptr);
    for (int i = 0; i < b.size; ++i) b.labels[static_cast<std::size_t>(i)] = y(i, 0) / net.architecture().scale;
    for (double g : analytic_gradient(net, b, nullptr)) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(Backward, MatchesFiniteDifferences) {
    SpeedNet net(Architecture::reduced(), 12);
    bias_output_positive(net);
    const Batch b = random_batch(net.architecture(), 16, 3);
    const GradientCheck r = check_gradient(net, b, nullptr);
    EXPECT_EQ(r.checked, net.parameter_count());
    // dense units that are off for the whole batch legitimately get zero gradient
    EXPECT_GT(r.nonzero, r.checked / 2);
    EXPECT_LT(r.max_relative_error, 1e-4) << "worst parameter " << r.worst_index;
}

TEST(Backward, FrozenDropoutMaskMatchesFiniteDifferences) {
    Architecture a = Architecture::reduced();
    a.layers.insert(a.layers.begin() + 7, LayerSpec::dropout(0.5));  // after flatten
    a.layers.insert(a.layers.begin() + 10, LayerSpec::dropout(0.5)); // after the hidden relu
    SpeedNet net(a, 12);
    bias_output_positive(net);
    const Batch b = random_batch(net.architecture(), 4, 5);
    const std::uint64_t mask_seed = 99;
    const auto g1 = analytic_gradient(net, b, &mask_seed);
    const auto g2 = analytic_gradient(net, b, &mask_seed);
    EXPECT_EQ(g1, g2);
    EXPECT_NE(g1, analytic_gradient(net, b, nullptr));
    EXPECT_LT(check_gradient(net, b, &mask_seed).max_relative_error, 1e-4);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
    SpeedNet net(Architecture::reduced(), 1);
    const auto before = net.parameters();
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.center_output = false;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    train(net, learnable_dataset(64, 1), cfg);
    EXPECT_EQ(net.parameters(), before);
}

TEST(Train, WarmupScalesFirstSteps) {
    const auto data = learnable_dataset(64, 1);
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 0;
    SpeedNet centered(Architecture::reduced(), 4);
    train(centered, data, cfg);  // centering only
    const auto before = centered.parameters();
    cfg.epochs = 1;
    cfg.warmup_steps = 1000000;
    SpeedNet slow(Architecture::reduced(), 4);
    train(slow, data, cfg);
    cfg.warmup_steps = 0;
    SpeedNet fast(Architecture::reduced(), 4);
    train(fast, data, cfg);
    double moved_slow = 0.0, moved_fast = 0.0;
    for (std::size_t j = 0; j < before.size(); ++j) {
        moved_slow = std::max(moved_slow, std::abs(slow.parameters()[j] - before[j]));
        moved_fast = std::max(moved_fast, std::abs(fast.parameters()[j] - before[j]));
    }
    // an Adam step moves a parameter by about lr at most; steps k = 1..4 use lr k / 1e6
    EXPECT_LE(moved_slow, 1e-3 * 10.0 / 1e6 * 1.01);
    EXPECT_GT(moved_fast, 1e-3);
    cfg.warmup_steps = -1;
    EXPECT_THROW(train(fast, data, cfg), std::invalid_argument);
}

TEST(Train, SplitArithmetic) {
    SpeedNet net(Architecture::reduced(), 1);
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainResult r = train(net, learnable_dataset(100, 2), cfg);
    EXPECT_EQ(r.n_train, 80u);
    EXPECT_EQ(r.n_val, 20u);
}

TEST(Train, CenteringRevivesDeadOutput) {
    // this initialization is below the final ReLU for every window
    SpeedNet net(Architecture::reduced(), 2);
    const auto data = learnable_dataset(200, 5);
    for (const auto& w : data) ASSERT_EQ(net.forward(w.input), 0.0);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.validation_fraction = 0.5;
    train(net, data, cfg);
    double pred = 0.0, label = 0.0;
    for (const auto& w : data) {
        pred += net.forward(w.input);
        label += w.label;
    }
    EXPECT_GT(pred, 0.5 * label);
    EXPECT_LT(pred, 1.5 * label);
}

TEST(Train, ValidationLossDecreases) {
    SpeedNet net(Architecture::reduced(), 4);
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 32;
    cfg.epochs = 15;
    cfg.seed = 3;
    const TrainResult r = train(net, learnable_dataset(500, 3), cfg);
    ASSERT_EQ(r.history.size(), 15u);
    EXPECT_LT(r.history.back().val_loss, r.initial_val_loss);
    EXPECT_LT(r.history.back().val_loss, 0.5 * r.initial_val_loss);
}

TEST(Train, Deterministic) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 16;
    cfg.epochs = 3;
    cfg.seed = 11;
    const auto data = learnable_dataset(120, 4);
    SpeedNet a(Architecture::reduced(), 6), b(Architecture::reduced(), 6);
    const auto ha = train(a, data, cfg).history;
    const auto hb = train(b, data, cfg).history;
    EXPECT_EQ(a.parameters(), b.parameters());
    for (std::size_t i = 0; i < ha.size(); ++i) EXPECT_EQ(ha[i].val_loss, hb[i].val_loss);
}

TEST(Train, BadConfigRejected) {
    SpeedNet net(Architecture::reduced(), 1);
    TrainConfig cfg;
    cfg.validation_fraction = 1.0;
    EXPECT_THROW(train(net, learnable_dataset(10, 1), cfg), std::invalid_argument);
    cfg.validation_fraction = 0.2;
    EXPECT_THROW(train(net, {}, cfg), std::invalid_argument);
}

TEST(Stream, Counts) {
    SpeedNet net(Architecture::reduced(), 1);
    ImuSeries s(100);
    for (std::size_t i = 0; i < s.size(); ++i) s[i].t = 0.02 * static_cast<double>(i);
    EXPECT_EQ(predict_stream(net, ImuSeries(s.begin(), s.begin() + 50)).size(), 1u);
    const SpeedSeries out = predict_stream(net, s);
    ASSERT_EQ(out.size(), 51u);
    EXPECT_EQ(out.front().t, s[49].t);
    EXPECT_EQ(out.back().t, s.back().t);
    EXPECT_THROW(predict_stream(net, ImuSeries(s.begin(), s.begin() + 49)), std::invalid_argument);
}

TEST(Stream, EqualsPerWindowForward) {
    SpeedNet net(Architecture::odonet(), 2);
    bias_output_positive(net, 0.3);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n;
    ImuSeries s(400);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i].t = 0.02 * static_cast<double>(i);
        s[i].gyro = Vec3(n(rng), n(rng), n(rng)) * 0.01;
        s[i].accel = Vec3(n(rng), n(rng), -9.8 + n(rng));
    }
    const SpeedSeries out = predict_stream(net, s);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].v, net.forward(window_at(s, i + 49)));
}

TEST(Fir, DesignProperties) {
    const FirFilter f = FirFilter::design(64, 0.1, 50.0);
    const auto& h = f.taps();
    ASSERT_EQ(h.size(), 65u);
    for (std::size_t k = 0; k < h.size(); ++k) EXPECT_EQ(h[k], h[h.size() - 1 - k]);
    double sum = 0.0;
    for (double v : h) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_NEAR(f.magnitude_response(0.0), 1.0, 1e-9);
    EXPECT_LT(20.0 * std::log10(f.magnitude_response(5.0)), -40.0);
}

TEST(Fir, ConstantPassesUnchanged) {
    const FirFilter f = FirFilter::design();
    for (double v : f.apply(std::vector<double>(200, 7.25))) EXPECT_NEAR(v, 7.25, 1e-9);
}

TEST(Fir, SinusoidAttenuated) {
    const FirFilter f = FirFilter::design();
    std::vector<double> x(2000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * M_PI * 5.0 * static_cast<double>(i) / 50.0);
    const auto y = f.apply(x);
    double peak = 0.0;
    for (std::size_t i = 100; i < y.size() - 100; ++i) peak = std::max(peak, std::abs(y[i]));
    EXPECT_LT(20.0 * std::log10(peak), -40.0);
}

TEST(Fir, ImpulseGivesTaps) {
    const FirFilter f = FirFilter::design();
    std::vector<double> x(301, 0.0);
    x[150] = 1.0;
    const auto y = f.apply(x);
    for (int k = 0; k <= 64; ++k) EXPECT_EQ(y[static_cast<std::size_t>(150 - 32 + k)], f.taps()[static_cast<std::size_t>(k)]);
}

TEST(Fir, StepIsTimeAligned) {
    const FirFilter f = FirFilter::design();
    std::vector<double> x(400, 0.0);
    const std::size_t step = 200;
    for (std::size_t i = step; i < x.size(); ++i) x[i] = 1.0;
    const auto y = f.apply(x);
    std::size_t cross = 0;
    while (y[cross] < 0.5) ++cross;
    EXPECT_LE(std::abs(static_cast<long>(cross) - static_cast<long>(step)), 1);
}

TEST(Fir, ShortSeriesRejected) {
    const FirFilter f = FirFilter::design();
    EXPECT_THROW(f.apply(std::vector<double>(64, 1.0)), std::invalid_argument);
    EXPECT_NO_THROW(f.apply(std::vector<double>(65, 1.0)));
}

TEST(Detector, Threshold) {
    EXPECT_TRUE(detect_zero_velocity(0.05));
    EXPECT_FALSE(detect_zero_velocity(0.1));
    EXPECT_TRUE(detect_zero_velocity(0.0));
}

TEST(ModelFile, RoundTripIsExact) {
    SpeedNet net(Architecture::odonet(), 21);
    const SpeedNet back = model_from_json(model_to_json(net));
    EXPECT_EQ(back.parameters(), net.parameters());
    EXPECT_EQ(back.architecture().layers.size(), net.architecture().layers.size());
    EXPECT_EQ(model_to_json(back), model_to_json(net));
}

TEST(ModelFile, TamperedChecksumRejected) {
    const SpeedNet net(Architecture::reduced(), 1);
    std::string text = model_to_json(net);
    const auto pos = text.find("\"scale\"");
    ASSERT_NE(pos, std::string::npos);
    text.replace(text.find(',', pos) - 1, 1, "9");
    EXPECT_THROW(model_from_json(text), std::runtime_error);
}

TEST(ModelFile, ShapeMismatchRejected) {
    const SpeedNet net(Architecture::reduced(), 1);
    auto doc = nlohmann::ordered_json::parse(model_to_json(net));
    doc["layers"][0]["depth"] = 5;
    // re-sign so the shape check, not the checksum, is what fails
    doc.erase("checksum");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    doc["checksum"] = hex;
    try {
        model_from_json(doc.dump());
        FAIL() << "expected a shape error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("shape"), std::string::npos) << e.what();
    }
}

TEST(ModelFile, ChecksumIsFnv1aOfCompactDump) {
    const SpeedNet net(Architecture::reduced(), 1);
    auto doc = nlohmann::ordered_json::parse(model_to_json(net));
    const std::string stored = doc["checksum"];
    doc.erase("checksum");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    EXPECT_EQ(stored, hex);
}

TEST(ModelFile, SaveLoad) {
    const auto dir = std::filesystem::temp_directory_path() / "odonav_model_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "m.json").string();
    const SpeedNet net(Architecture::reduced(), 8);
    save_model(net, path);
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    EXPECT_EQ(load_model(path).parameters(), net.parameters());
    std::filesystem::remove_all(dir);
}

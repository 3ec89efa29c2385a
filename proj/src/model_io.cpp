#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "odonav/io.hpp"
#include "odonav/speednet.hpp"

namespace odonav {

namespace {

constexpr const char* kFormat = "odonav-speednet";
constexpr int kVersion = 1;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Checksum over the compact dump of everything except the checksum field.
std::string content_checksum(nlohmann::ordered_json doc) {
    doc.erase("checksum");
    return hex64(fnv1a64(doc.dump()));
}

}  // namespace

std::string model_to_json(const SpeedNet& model) {
    const Architecture& arch = model.architecture();
    nlohmann::ordered_json doc;
    doc["format"] = kFormat;
    doc["version"] = kVersion;
    doc["input"] = {{"length", arch.length}, {"channels", arch.channels}};
    doc["scale"] = arch.scale;

    const auto& params = model.parameters();
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const LayerSpec& l = arch.layers[i];
        nlohmann::ordered_json jl;
        jl["type"] = to_string(l.type);
        switch (l.type) {
            case LayerType::Conv1d: jl["depth"] = l.size; jl["kernel"] = l.kernel; break;
            case LayerType::MaxPool: jl["size"] = l.size; break;
            case LayerType::Dense: jl["units"] = l.size; break;
            case LayerType::Dropout: jl["rate"] = l.rate; break;
            default: break;
        }
        const auto& slot = model.slots()[i];
        if (slot.weight_rows > 0) {
            const auto w0 = params.begin() + static_cast<std::ptrdiff_t>(slot.weight_offset);
            const auto b0 = params.begin() + static_cast<std::ptrdiff_t>(slot.bias_offset);
            jl["weight_shape"] = {slot.weight_rows, slot.weight_cols};
            jl["weights"] = std::vector<double>(w0, w0 + slot.weight_rows * slot.weight_cols);
            jl["bias_shape"] = {slot.bias_size};
            jl["bias"] = std::vector<double>(b0, b0 + slot.bias_size);
        }
        layers.push_back(std::move(jl));
    }
    doc["layers"] = std::move(layers);
    doc["checksum"] = content_checksum(doc);
    // Doubles are written in shortest round-trip form, so weights reload exactly.
    return doc.dump(1);
}

SpeedNet model_from_json(const std::string& text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("model file: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != kFormat) throw std::runtime_error("model file: unknown format");
        if (doc.at("version").get<int>() != kVersion) throw std::runtime_error("model file: unsupported version");
        if (doc.at("checksum").get<std::string>() != content_checksum(doc)) {
            throw std::runtime_error("model file: checksum mismatch");
        }

        Architecture arch;
        arch.length = doc.at("input").at("length").get<int>();
        arch.channels = doc.at("input").at("channels").get<int>();
        arch.scale = doc.at("scale").get<double>();
        for (const auto& jl : doc.at("layers")) {
            LayerSpec l;
            l.type = layer_type_from_string(jl.at("type").get<std::string>());
            switch (l.type) {
                case LayerType::Conv1d:
                    l.size = jl.at("depth").get<int>();
                    l.kernel = jl.at("kernel").get<int>();
                    break;
                case LayerType::MaxPool: l.size = jl.at("size").get<int>(); break;
                case LayerType::Dense: l.size = jl.at("units").get<int>(); break;
                case LayerType::Dropout: l.rate = jl.at("rate").get<double>(); break;
                default: break;
            }
            arch.layers.push_back(l);
        }

        SpeedNet model(arch);
        auto& params = model.parameters();
        const auto& jlayers = doc.at("layers");
        for (std::size_t i = 0; i < arch.layers.size(); ++i) {
            const auto& slot = model.slots()[i];
            const auto& jl = jlayers[i];
            if (slot.weight_rows == 0) {
                if (jl.contains("weights")) throw std::runtime_error("model file: unexpected weights");
                continue;
            }
            const auto wshape = jl.at("weight_shape").get<std::vector<int>>();
            const auto bshape = jl.at("bias_shape").get<std::vector<int>>();
            const auto w = jl.at("weights").get<std::vector<double>>();
            const auto b = jl.at("bias").get<std::vector<double>>();
            if (wshape != std::vector<int>{slot.weight_rows, slot.weight_cols} ||
                bshape != std::vector<int>{slot.bias_size} ||
                w.size() != static_cast<std::size_t>(slot.weight_rows) * slot.weight_cols ||
                b.size() != static_cast<std::size_t>(slot.bias_size)) {
                throw std::runtime_error("model file: shape mismatch in layer " + std::to_string(i));
            }
            std::copy(w.begin(), w.end(), params.begin() + static_cast<std::ptrdiff_t>(slot.weight_offset));
            std::copy(b.begin(), b.end(), params.begin() + static_cast<std::ptrdiff_t>(slot.bias_offset));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("model file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("model file: ") + e.what());
    }
}

void save_model(const SpeedNet& model, const std::string& path) { write_text_atomic(path, model_to_json(model) + "\n"); }

SpeedNet load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace odonav

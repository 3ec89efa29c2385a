#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "odonav/config.hpp"
#include "odonav/experiment.hpp"

namespace py = pybind11;
using namespace odonav;

namespace {

AppConfig config_or_default(const std::optional<std::string>& text) {
    return text ? config_from_json(*text) : default_config();
}

py::dict nav_arrays(const NavSeries& nav) {
    const auto n = static_cast<py::ssize_t>(nav.size());
    py::array_t<double> t(n), pos({n, py::ssize_t{3}}), vel({n, py::ssize_t{3}}), att({n, py::ssize_t{3}});
    auto tt = t.mutable_unchecked<1>();
    auto p = pos.mutable_unchecked<2>();
    auto v = vel.mutable_unchecked<2>();
    auto a = att.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& s = nav[static_cast<std::size_t>(i)];
        tt(i) = s.t;
        p(i, 0) = s.nav.pos.lat;
        p(i, 1) = s.nav.pos.lon;
        p(i, 2) = s.nav.pos.h;
        const EulerAngles e = rotation_to_euler(s.nav.att);
        for (int k = 0; k < 3; ++k) v(i, k) = s.nav.vel[k];
        a(i, 0) = e.roll;
        a(i, 1) = e.pitch;
        a(i, 2) = e.yaw;
    }
    py::dict d;
    d["t"] = t;
    d["pos"] = pos;  // lat, lon [rad], h [m]
    d["vel"] = vel;  // NED m/s
    d["att"] = att;  // roll, pitch, yaw [rad]
    return d;
}

py::array_t<double> speeds(const SpeedSeries& s) {
    py::array_t<double> out({static_cast<py::ssize_t>(s.size()), py::ssize_t{2}});
    auto o = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < s.size(); ++i) {
        o(static_cast<py::ssize_t>(i), 0) = s[i].t;
        o(static_cast<py::ssize_t>(i), 1) = s[i].v;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_odonav, m) {
    m.doc() = "GNSS/INS integration with a learned pseudo-odometer";

    m.def("default_config", [] { return config_to_json(default_config()); }, "Default configuration as JSON text.");
    m.def("normalize_config", [](const std::string& text) { return config_to_json(config_from_json(text)); },
          py::arg("text"), "Validate a configuration and return it with every default filled in.");

    m.def(
        "geodetic_to_local",
        [](double lat, double lon, double h, double lat0, double lon0, double h0) -> Vec3 {
            return geodetic_to_local({lat, lon, h}, {lat0, lon0, h0});
        },
        py::arg("lat"), py::arg("lon"), py::arg("h"), py::arg("lat0"), py::arg("lon0"), py::arg("h0"));
    m.def(
        "local_to_geodetic",
        [](const Vec3& ned, double lat0, double lon0, double h0) {
            const GeodeticPosition p = local_to_geodetic(ned, {lat0, lon0, h0});
            return py::make_tuple(p.lat, p.lon, p.h);
        },
        py::arg("ned"), py::arg("lat0"), py::arg("lon0"), py::arg("h0"));
    m.def(
        "euler_to_rotation", [](double roll, double pitch, double yaw) -> Mat3 { return euler_to_rotation({roll, pitch, yaw}); },
        py::arg("roll"), py::arg("pitch"), py::arg("yaw"), "C_b^n for ZYX angles in radians.");

    m.def(
        "fir_taps", [](int order, double cutoff_hz, double rate_hz) { return FirFilter::design(order, cutoff_hz, rate_hz).taps(); },
        py::arg("order") = 64, py::arg("cutoff_hz") = 0.1, py::arg("rate_hz") = kImuRateHz);
    m.def(
        "fir_apply",
        [](const std::vector<double>& x, int order, double cutoff_hz) { return FirFilter::design(order, cutoff_hz).apply(x); },
        py::arg("x"), py::arg("order") = 64, py::arg("cutoff_hz") = 0.1, "Zero-phase low-pass of a 50 Hz series.");

    m.def(
        "simulate",
        [](const std::string& out_dir, std::uint64_t seed, const std::optional<std::string>& config) {
            write_scenario(simulate_scenario(config_or_default(config).simulation, seed), out_dir);
        },
        py::arg("out_dir"), py::arg("seed") = 0, py::arg("config") = py::none(), "Write a simulated scenario directory.");

    py::class_<SpeedNet>(m, "SpeedNet")
        .def_static("load", &load_model, py::arg("path"))
        .def_property_readonly("parameter_count", &SpeedNet::parameter_count)
        .def(
            "predict",
            [](const SpeedNet& net, py::array_t<double, py::array::c_style | py::array::forcecast> windows) {
                if (windows.ndim() != 3 || windows.shape(1) != kWindowLength || windows.shape(2) != kWindowChannels) {
                    throw std::invalid_argument("windows must have shape (n, 50, 6)");
                }
                const auto n = windows.shape(0);
                std::vector<WindowInput> in(static_cast<std::size_t>(n));
                const double* src = windows.data();
                for (py::ssize_t i = 0; i < n; ++i) {
                    std::copy(src + i * kWindowLength * kWindowChannels, src + (i + 1) * kWindowLength * kWindowChannels,
                              in[static_cast<std::size_t>(i)].data());
                }
                return net.forward_many(in);
            },
            py::arg("windows"), "Speed in m/s for v-frame windows [wx wy wz fx fy fz].");

    m.def(
        "infer",
        [](const std::string& data_dir, const std::string& model_path, const std::optional<std::string>& config) {
            const PseudoSpeed p = infer_scenario(load_model(model_path), read_scenario(data_dir), config_or_default(config));
            py::dict d;
            d["raw"] = speeds(p.raw);
            d["filtered"] = speeds(p.filtered);
            return d;
        },
        py::arg("data_dir"), py::arg("model_path"), py::arg("config") = py::none(),
        "Network speed for a scenario; arrays of (t, v) rows.");

    m.def(
        "fuse",
        [](const std::string& data_dir, const std::string& mode, const std::optional<std::string>& config,
           const std::optional<std::string>& model_path, std::optional<std::tuple<double, double, double>> outage) {
            const AppConfig cfg = config_or_default(config);
            const ScenarioData s = read_scenario(data_dir);
            std::optional<SpeedNet> model;
            if (model_path) model = load_model(*model_path);
            std::optional<OutageSchedule> sched;
            if (outage) sched = OutageSchedule{std::get<0>(*outage), std::get<1>(*outage), std::get<2>(*outage)};
            FusionOutput r = fuse_scenario(s, cfg, aiding_mode_from_string(mode), sched, model ? &*model : nullptr);
            py::dict d = nav_arrays(r.nav);
            if (sched) {
                const OutageEvaluation e = mimic_outage_eval(r.nav, s.truth, *sched, s.meta.origin);
                d["outage_max_horizontal"] = e.max_horizontal_error;
                d["outage_rms"] = e.rms;
            }
            return d;
        },
        py::arg("data_dir"), py::arg("mode") = "nhc", py::arg("config") = py::none(), py::arg("model_path") = py::none(),
        py::arg("outage") = py::none(),
        "Run the filter on a scenario. outage=(start, length, period) withholds GNSS and adds outage metrics.");

    m.def(
        "truth", [](const std::string& data_dir) { return nav_arrays(read_scenario(data_dir).truth); }, py::arg("data_dir"));
}

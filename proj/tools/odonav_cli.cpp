// odonav: simulate, train, infer, fuse, evaluate, report.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "odonav/experiment.hpp"

namespace fs = std::filesystem;
using namespace odonav;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out = ".";
};

struct OutageFlags {
    std::optional<double> start, length, period;
    bool none = false;
};

AppConfig config_of(const Common& c) { return c.config.empty() ? default_config() : load_config(c.config); }

std::string in_dir(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

std::optional<OutageSchedule> schedule_of(const AppConfig& cfg, const OutageFlags& f) {
    if (f.none) return std::nullopt;
    OutageSchedule s = cfg.outage;
    if (f.start) s.start = *f.start;
    if (f.length) s.length = *f.length;
    if (f.period) s.period = *f.period;
    s.validate();
    return s;
}

std::string speed_table(const PseudoSpeed& p) {
    std::string out = "t,raw,filtered\n";
    for (std::size_t i = 0; i < p.raw.size(); ++i) {
        out += format_number(p.raw[i].t) + ',' + format_number(p.raw[i].v) + ',' + format_number(p.filtered[i].v) + '\n';
    }
    return out;
}

PseudoSpeed read_speed_table(const std::string& path) {
    PseudoSpeed p;
    for (const auto& r : parse_numeric_csv(read_text(path), "t,raw,filtered")) {
        p.raw.push_back({r[0], r[1]});
        p.filtered.push_back({r[0], r[2]});
    }
    return p;
}

int cmd_simulate(const Common& c) {
    const AppConfig cfg = config_of(c);
    write_scenario(simulate_scenario(cfg.simulation, c.seed), c.out);
    return 0;
}

int cmd_train(const Common& c, const std::vector<std::string>& data) {
    AppConfig cfg = config_of(c);
    std::vector<LabeledWindow> windows;
    for (const auto& dir : data) {
        try {
            auto p = prepare_training_data(read_scenario(dir), cfg);
            std::move(p.windows.begin(), p.windows.end(), std::back_inserter(windows));
        } catch (const std::runtime_error& e) {
            // unusable recordings are dropped, not fatal
            std::cerr << "skipping " << dir << ": " << e.what() << "\n";
        }
    }
    if (windows.empty()) throw std::runtime_error("no usable training data");
    cfg.training.seed = c.seed;
    SpeedNet model(architecture_by_name(cfg.architecture), c.seed);
    std::string history = "epoch,train_loss,val_loss\n";
    const TrainResult r = train(model, windows, cfg.training, [&](const EpochStats& e) {
        history += std::to_string(e.epoch) + ',' + format_number(e.train_loss) + ',' + format_number(e.val_loss) + '\n';
    });
    fs::create_directories(c.out);
    save_model(model, in_dir(c.out, "model.json"));
    write_text_atomic(in_dir(c.out, "loss_history.csv"), history);
    nlohmann::ordered_json summary = {{"windows", windows.size()},
                                      {"train", r.n_train},
                                      {"validation", r.n_val},
                                      {"initial_val_loss", r.initial_val_loss},
                                      {"final_val_loss", r.history.empty() ? r.initial_val_loss : r.history.back().val_loss},
                                      {"epochs", r.history.size()},
                                      {"seed", c.seed}};
    write_text_atomic(in_dir(c.out, "train_summary.json"), summary.dump(2) + "\n");
    return 0;
}

int cmd_infer(const Common& c, const std::string& data, const std::string& model_path) {
    const AppConfig cfg = config_of(c);
    const SpeedNet model = load_model(model_path);
    const PseudoSpeed p = infer_scenario(model, read_scenario(data), cfg);
    fs::create_directories(c.out);
    write_text_atomic(in_dir(c.out, "speed.csv"), speed_table(p));
    return 0;
}

int cmd_fuse(const Common& c, const std::string& data, const std::string& mode_name, const std::string& model_path,
             const OutageFlags& of) {
    const AppConfig cfg = config_of(c);
    const AidingMode mode = aiding_mode_from_string(mode_name);
    std::optional<SpeedNet> model;
    if (mode == AidingMode::PseudoOdo) {
        if (model_path.empty()) throw std::runtime_error("--model is required for --mode pseudo");
        model = load_model(model_path);
    }
    const auto schedule = schedule_of(cfg, of);
    const FusionOutput out = fuse_scenario(read_scenario(data), cfg, mode, schedule, model ? &*model : nullptr);

    fs::create_directories(c.out);
    write_text_atomic(in_dir(c.out, "nav.csv"), format_nav_csv(out.nav));
    write_text_atomic(in_dir(c.out, "updates.csv"), format_update_log(out.log));
    if (!out.raw_speed.empty()) write_text_atomic(in_dir(c.out, "speed.csv"), speed_table({out.raw_speed, out.filtered_speed}));
    nlohmann::ordered_json run = {{"mode", to_string(mode)}};
    if (schedule) run["schedule"] = {{"start", schedule->start}, {"length", schedule->length}, {"period", schedule->period}};
    if (out.mounting) run["mounting_rad"] = {{"pitch", out.mounting->pitch}, {"heading", out.mounting->heading}};
    std::size_t rejected = 0;
    for (const auto& e : out.log) rejected += e.applied ? 0 : 1;
    run["updates"] = {{"logged", out.log.size()}, {"not_applied", rejected}};
    write_text_atomic(in_dir(c.out, "run.json"), run.dump(2) + "\n");
    return 0;
}

int cmd_evaluate(const Common& c, const std::string& data, const std::string& fused, const std::string& speed_path) {
    if (fused.empty() && speed_path.empty()) throw std::runtime_error("evaluate needs --fused and/or --speed");
    const ScenarioData s = read_scenario(data);
    Evaluation e;
    e.mode = "none";
    if (!fused.empty()) {
        const auto run = nlohmann::json::parse(read_text(in_dir(fused, "run.json")));
        e.mode = run.at("mode").get<std::string>();
        if (run.contains("schedule")) {
            const auto& j = run.at("schedule");
            e.schedule = OutageSchedule{j.at("start").get<double>(), j.at("length").get<double>(), j.at("period").get<double>()};
            e.outage = mimic_outage_eval(read_nav_csv(in_dir(fused, "nav.csv")), s.truth, *e.schedule, s.meta.origin);
        }
    }
    std::string sp = speed_path;
    if (sp.empty() && fs::exists(in_dir(fused, "speed.csv"))) sp = in_dir(fused, "speed.csv");
    if (!sp.empty()) {
        score_speed(e, align_speed(read_speed_table(sp), s.speed));
    }
    fs::create_directories(c.out);
    write_text_atomic(in_dir(c.out, "metrics.txt"), evaluation_to_text(e));
    write_text_atomic(in_dir(c.out, "metrics.json"), evaluation_to_json(e));
    return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& evals) {
    std::vector<Evaluation> ev;
    for (const auto& p : evals) ev.push_back(evaluation_from_json(read_text(p)));
    fs::create_directories(c.out);
    write_text_atomic(in_dir(c.out, "report.txt"), format_outage_report(ev));
    write_text_atomic(in_dir(c.out, "report.json"), outage_report_json(ev));
    return 0;
}

void add_common(CLI::App* app, Common& c, bool with_seed) {
    app->add_option("--config", c.config, "JSON configuration file (defaults built in)")->check(CLI::ExistingFile);
    if (with_seed) app->add_option("--seed", c.seed, "random seed");
    app->add_option("--out", c.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"odonav: pseudo-odometer aided GNSS/INS toolkit"};
    app.require_subcommand(1);

    Common c;
    OutageFlags of;
    std::vector<std::string> data_dirs, evals;
    std::string data, model, mode = "nhc", fused, speed;

    auto* sim = app.add_subcommand("simulate", "write a simulated scenario");
    add_common(sim, c, true);

    auto* tr = app.add_subcommand("train", "train the speed network on scenarios");
    add_common(tr, c, true);
    tr->add_option("--data", data_dirs, "scenario directories")->required()->check(CLI::ExistingDirectory);

    auto* inf = app.add_subcommand("infer", "regress and filter speed for a scenario");
    add_common(inf, c, false);
    inf->add_option("--data", data, "scenario directory")->required()->check(CLI::ExistingDirectory);
    inf->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);

    auto* fu = app.add_subcommand("fuse", "run the integrated navigation filter");
    add_common(fu, c, false);
    fu->add_option("--data", data, "scenario directory")->required()->check(CLI::ExistingDirectory);
    fu->add_option("--mode", mode, "aiding mode")->check(CLI::IsMember({"nhc", "pseudo", "wheel"}));
    fu->add_option("--model", model, "model file (pseudo mode)")->check(CLI::ExistingFile);
    fu->add_option("--outage-start", of.start, "first outage start [s]");
    fu->add_option("--outage-len", of.length, "outage length [s]");
    fu->add_option("--outage-period", of.period, "outage period [s]");
    fu->add_flag("--no-outage", of.none, "keep every GNSS fix");

    auto* ev = app.add_subcommand("evaluate", "compute metrics for a fused run and/or a speed series");
    add_common(ev, c, false);
    ev->add_option("--data", data, "scenario directory")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--fused", fused, "fuse output directory")->check(CLI::ExistingDirectory);
    ev->add_option("--speed", speed, "speed.csv from infer")->check(CLI::ExistingFile);

    auto* rep = app.add_subcommand("report", "compare aiding modes over outage sequences");
    add_common(rep, c, false);
    rep->add_option("--eval", evals, "metrics.json files")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(c);
        if (tr->parsed()) return cmd_train(c, data_dirs);
        if (inf->parsed()) return cmd_infer(c, data, model);
        if (fu->parsed()) return cmd_fuse(c, data, mode, model, of);
        if (ev->parsed()) return cmd_evaluate(c, data, fused, speed);
        if (rep->parsed()) return cmd_report(c, evals);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}

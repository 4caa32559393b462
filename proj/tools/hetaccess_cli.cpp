// Command-line front end: run, sweep and report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetaccess/config.hpp"
#include "hetaccess/runner.hpp"
#include "hetaccess/tables.hpp"

namespace fs = std::filesystem;
using namespace hetaccess;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string schemes;
    std::string mode;
    int num_iot = -1;
    double b2_fraction = -1.0;
    int deadline = -1;
    long long seed = -1;
    int replications = -1;
    long train_frames = -1;
    long infer_frames = -1;
    std::string out_dir;
    int jobs = 0;
    bool save_qtables = false;
    bool frame_log = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config_path, "INI scenario/experiment file")->check(CLI::ExistingFile);
    cmd->add_option("--set", o.overrides, "override as section.key=value (repeatable)");
    cmd->add_option("-s,--scheme", o.schemes, "scheme or comma list: VI,QL,QLPlusVI,DoQL,DoQLPlusVI,IRSA");
    cmd->add_option("--mode", o.mode, "slicing or sharing");
    cmd->add_option("-J,--num-iot", o.num_iot, "number of IoT devices");
    cmd->add_option("--b2-fraction", o.b2_fraction, "IoT share B2/B of the band (slicing)");
    cmd->add_option("--deadline", o.deadline, "latency deadline in slots");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("-r,--replications", o.replications, "replications per scheme");
    cmd->add_option("--train-frames", o.train_frames, "training frames");
    cmd->add_option("--infer-frames", o.infer_frames, "inference frames");
    cmd->add_option("-o,--out", o.out_dir, "output directory")->required();
    cmd->add_option("-j,--jobs", o.jobs, "worker threads (0 = hardware concurrency)");
    cmd->add_flag("--save-qtables", o.save_qtables, "write Q-table checkpoints");
    cmd->add_flag("--frame-log", o.frame_log, "write inference frame logs");
}

config::Tree build_tree(const CommonOptions& o) {
    config::Tree t = o.config_path.empty() ? config::Tree{} : config::load(o.config_path);
    const auto set = [&t](const std::string& k, const std::string& v) { t.put(k, v); };
    if (!o.mode.empty()) {
        set("band.mode", o.mode);
        for (const char* k : {"b1", "b2", "b3", "iot_fraction"})
            if (auto band = t.get_child_optional("band")) band->erase(k);
    }
    if (o.b2_fraction >= 0.0) {
        for (const char* k : {"b1", "b2", "b3"})
            if (auto band = t.get_child_optional("band")) band->erase(k);
        set("band.iot_fraction", config::format_double(o.b2_fraction));
    }
    if (o.num_iot >= 0) set("system.num_iot", std::to_string(o.num_iot));
    if (o.deadline >= 0) set("system.latency_deadline", std::to_string(o.deadline));
    if (o.seed >= 0) set("experiment.base_seed", std::to_string(o.seed));
    if (o.replications >= 0) set("experiment.replications", std::to_string(o.replications));
    if (o.train_frames >= 0) set("experiment.training_frames", std::to_string(o.train_frames));
    if (o.infer_frames >= 0) set("experiment.inference_frames", std::to_string(o.infer_frames));
    if (!o.schemes.empty()) set("experiment.scheme", o.schemes);
    for (const auto& a : o.overrides) config::apply_override(t, a);
    return t;
}

// Splits the scheme list off the tree; the rest parses as one spec.
std::vector<runner::ExperimentSpec> build_specs(config::Tree t) {
    std::string list = t.get<std::string>("experiment.scheme", "DoQL");
    if (auto exp = t.get_child_optional("experiment")) exp->erase("scheme");
    const auto base = runner::experiment_spec(t);
    std::vector<runner::ExperimentSpec> specs;
    std::replace(list.begin(), list.end(), ',', ' ');
    std::istringstream in(list);
    for (std::string s; in >> s;) {
        auto spec = base;
        spec.scheme = runner::parse_scheme(s);
        for (const auto& w : runner::check(spec)) std::cerr << "warning: " << w << '\n';
        specs.push_back(spec);
    }
    if (specs.empty()) throw ConfigError("experiment.scheme", "no scheme given");
    return specs;
}

std::string config_echo(const std::vector<runner::ExperimentSpec>& specs) {
    auto t = config::parse(runner::to_ini(specs.front()));
    std::string list;
    for (const auto& s : specs) list += (list.empty() ? "" : ",") + std::string(runner::to_string(s.scheme));
    t.put("experiment.scheme", list);
    return config::to_ini(t);
}

runner::ReplicationOutputs prepare_outputs(const CommonOptions& o) {
    fs::create_directories(o.out_dir);
    runner::ReplicationOutputs out;
    if (o.save_qtables) {
        out.qtable_dir = fs::path(o.out_dir) / "qtables";
        fs::create_directories(*out.qtable_dir);
    }
    if (o.frame_log) {
        out.frame_log_dir = fs::path(o.out_dir) / "frame_logs";
        fs::create_directories(*out.frame_log_dir);
    }
    return out;
}

int jobs_of(const CommonOptions& o) {
    return o.jobs > 0 ? o.jobs : std::max(1, int(std::thread::hardware_concurrency()));
}

int cmd_run(const CommonOptions& o) {
    const auto specs = build_specs(build_tree(o));
    const auto outputs = prepare_outputs(o);
    runner::write_text(fs::path(o.out_dir) / "config.ini", config_echo(specs));
    std::vector<metrics::RunArtifacts> runs;
    for (const auto& spec : specs) {
        auto part = runner::run(spec, jobs_of(o), outputs);
        runs.insert(runs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    const auto points = metrics::operating_points(runs, "none", 0.0);
    runner::write_run_tables(o.out_dir, runs, points, specs.front().params.slot_duration);
    for (const auto& p : points)
        std::cout << p.scheme << '\t' << p.mode << "\tJ=" << p.num_iot << "\treward=" << metrics::fmt(p.reward.mean)
                  << "\tthroughput=" << metrics::fmt(p.throughput.mean) << '\n';
    return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& axis, const std::string& values) {
    auto tree = build_tree(o);
    if (!axis.empty()) tree.put("experiment.sweep_axis", axis);
    if (!values.empty()) tree.put("experiment.sweep_values", values);
    const auto specs = build_specs(tree);
    const auto outputs = prepare_outputs(o);
    runner::write_text(fs::path(o.out_dir) / "config.ini", config_echo(specs));
    std::vector<metrics::RunArtifacts> runs;
    std::vector<metrics::OperatingPoint> points;
    for (const auto& spec : specs) {
        auto r = runner::sweep(spec, jobs_of(o), outputs);
        runs.insert(runs.end(), r.runs.begin(), r.runs.end());
        points.insert(points.end(), r.points.begin(), r.points.end());
    }
    runner::write_run_tables(o.out_dir, runs, points, specs.front().params.slot_duration);
    for (const auto& p : points)
        std::cout << p.scheme << '\t' << p.mode << '\t' << p.axis << '=' << metrics::fmt(p.axis_value)
                  << "\treward=" << metrics::fmt(p.reward.mean) << "\tee=" << metrics::fmt(p.energy_efficiency.mean)
                  << '\n';
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& baseline, const std::string& out) {
    std::vector<metrics::RunArtifacts> runs;
    for (const auto& in : inputs) {
        const fs::path path = fs::is_directory(in) ? fs::path(in) / "summary.tsv" : fs::path(in);
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot read " + path.string());
        auto part = metrics::read_summary(is);
        runs.insert(runs.end(), part.begin(), part.end());
    }
    if (out.empty()) {
        metrics::write_report(std::cout, runs, baseline);
    } else {
        runner::write_table(out, [&](std::ostream& os) { metrics::write_report(os, runs, baseline); });
    }
    return 0;
}

void emit_error(const std::string& kind, const std::string& message, const std::string& field = {}) {
    nlohmann::json j{{"error", kind}, {"message", message}};
    if (!field.empty()) j["field"] = field;
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heterogeneous uplink access simulator"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    auto* run = app.add_subcommand("run", "train and evaluate schemes over replications");
    add_common(run, run_opts);

    CommonOptions sweep_opts;
    std::string axis, values;
    auto* sweep = app.add_subcommand("sweep", "one run per value of a sweep axis");
    add_common(sweep, sweep_opts);
    sweep->add_option("--axis", axis, "iot_fraction, num_iot or deadline");
    sweep->add_option("--values", values, "comma-separated axis values");

    std::vector<std::string> inputs;
    std::string baseline, report_out;
    auto* report = app.add_subcommand("report", "summarize summary tables, optionally against a baseline");
    report->add_option("inputs", inputs, "run directories or summary.tsv files")->required();
    report->add_option("--baseline", baseline, "scheme for the paired comparison");
    report->add_option("-o,--out", report_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return 2;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts, axis, values);
        if (*report) return cmd_report(inputs, baseline, report_out);
    } catch (const ConfigError& e) {
        emit_error("config", e.what(), e.field());
        return 2;
    } catch (const std::exception& e) {
        emit_error("runtime", e.what());
        return 1;
    }
    return 0;
}

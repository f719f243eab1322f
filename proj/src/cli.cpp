#include "eclip/cli.hpp"

#include "eclip/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace eclip {

namespace {

struct RunOptions {
    std::string config;
    std::string mode;
    std::optional<int> switch_max;
    std::optional<std::uint64_t> seed;
    std::string slowdown_mode;
    std::optional<int> workers;
    std::string out = "out";
    std::string format = "csv";
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool with_mode) {
    cmd->add_option("--config", o.config, "Scenario configuration (TOML)")->required()->check(CLI::ExistingFile);
    if (with_mode) cmd->add_option("--mode", o.mode, "baseline|model_wise|kw_ioctl|kw_prealloc|eclip");
    cmd->add_option("--switch-max", o.switch_max, "Per-request CU-switch budget")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", o.seed, "Seed for arrivals and IOCTL costs");
    cmd->add_option("--slowdown-mode", o.slowdown_mode, "paper_as_written|exclude_self|excess_over_capacity");
    cmd->add_option("--workers", o.workers, "Keep only the first N workers")->check(CLI::Range(1, 3));
    cmd->add_option("--out", o.out, "Output directory (ECLIP_SIM_OUT overrides)");
    cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

fs::path output_dir(const std::string& flag) {
    const char* env = std::getenv("ECLIP_SIM_OUT");
    fs::path dir = (env && *env) ? fs::path(env) : fs::path(flag);
    fs::create_directories(dir);
    return dir;
}

MixSpec load_with_overrides(const RunOptions& o) {
    MixSpec mix = load_mix_config(o.config);
    if (o.switch_max) mix.base.switch_max = *o.switch_max;
    if (o.seed) mix.base.seed = *o.seed;
    if (!o.slowdown_mode.empty()) mix.base.slowdown_mode = parse_slowdown_mode(o.slowdown_mode);
    if (o.workers) {
        if (*o.workers > mix.base.worker_count())
            throw std::invalid_argument("--workers exceeds the " + std::to_string(mix.base.worker_count()) +
                                        " workers in the config");
        mix.base.workers.resize(static_cast<std::size_t>(*o.workers));
    }
    if (!o.mode.empty()) mix.modes = {parse_partitioning_mode(o.mode)};
    mix.validate();
    return mix;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

void write_report(const fs::path& dir, const Report& report, const std::string& format) {
    {
        auto f = open_out(dir / "results.json");
        write_report_json(f, report);
    }
    if (format == "csv") {
        auto f = open_out(dir / "report.csv");
        write_report_csv(f, report);
    }
}

void write_run_artifacts(const fs::path& dir, const ScenarioRun& r) {
    r.table.save(dir / "lookup_table.json");
    auto ev = open_out(dir / "events.ndjson");
    r.timeline.write_events(ev);
    auto iv = open_out(dir / "intervals.ndjson");
    r.timeline.write_intervals(iv);
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Kernel-wise CU partitioning simulator"};
    app.require_subcommand(1);

    // profile synth
    auto* profile = app.add_subcommand("profile", "Profile utilities");
    profile->require_subcommand(1);
    auto* synth = profile->add_subcommand("synth", "Synthesize a kernel execution-time profile");
    std::string synth_name;
    int synth_kernels = 0;
    std::uint64_t synth_seed = 1;
    KneeDistribution knees;
    std::string synth_out;
    bool synth_append = false;
    synth->add_option("--name", synth_name, "Model name")->required();
    synth->add_option("--kernels", synth_kernels, "Kernel count")->required()->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--knee-weights", knees.knee_weights, "Relative knee probability per config")->delimiter(',');
    synth->add_option("--persistence", knees.knee_persistence, "Probability a kernel reuses its predecessor's knee");
    synth->add_option("--min-us", knees.min_time_us, "Lower bound of time at the knee");
    synth->add_option("--max-us", knees.max_time_us, "Upper bound of time at the knee");
    synth->add_option("--decay", knees.decay, "Exponent of the slowdown below the knee");
    synth->add_option("--flat-drop", knees.flat_drop, "Relative drop from the knee to full GPU");
    synth->add_option("--out", synth_out, "Profile file")->required();
    synth->add_flag("--append", synth_append, "Append to an existing profile file");

    RunOptions plan_o, run_o, mix_o;
    auto* plan = app.add_subcommand("plan", "Compute the lookup table of one mode");
    add_run_options(plan, plan_o, true);
    auto* run_cmd = app.add_subcommand("run", "Simulate one mode");
    add_run_options(run_cmd, run_o, true);
    auto* mix_cmd = app.add_subcommand("mix", "Simulate every mode of a config and normalize to baseline");
    add_run_options(mix_cmd, mix_o, false);

    auto* report = app.add_subcommand("report", "Re-render a saved results.json");
    std::string report_in, report_out = "out", report_format = "csv";
    report->add_option("--in", report_in, "results.json")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Output directory (ECLIP_SIM_OUT overrides)");
    report->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed()) {
            auto model = synthesize_profile(synth_name, synth_kernels, knees, synth_seed);
            std::vector<ModelProfile> models;
            if (synth_append && fs::exists(synth_out)) models = load_profiles(synth_out);
            for (const auto& m : models)
                if (m.model_name == synth_name) throw std::invalid_argument("model '" + synth_name + "' already in " + synth_out);
            models.push_back(std::move(model));
            if (auto parent = fs::path(synth_out).parent_path(); !parent.empty()) fs::create_directories(parent);
            save_profiles(synth_out, models);
            std::cout << "wrote " << synth_out << " (" << models.size() << " models)\n";
        } else if (plan->parsed()) {
            MixSpec mix = load_with_overrides(plan_o);
            if (plan_o.mode.empty()) mix.modes = {PartitioningMode::Eclip};
            const auto dir = output_dir(plan_o.out);
            const auto table = plan_for_mode(mix.scenario(mix.modes.front()));
            table.save(dir / "lookup_table.json");
            std::cout << "lookup table " << table.hash_hex() << " -> " << (dir / "lookup_table.json").string() << '\n';
        } else if (run_cmd->parsed()) {
            MixSpec mix = load_with_overrides(run_o);
            if (run_o.mode.empty()) mix.modes = {PartitioningMode::Eclip};
            const auto dir = output_dir(run_o.out);
            const auto r = run_scenario(mix.scenario(mix.modes.front()), mix.power);
            write_run_artifacts(dir, r);
            std::map<std::string, ScenarioResult> results{{r.spec.name, r.result}};
            write_report(dir, normalize(results, r.spec.name), run_o.format);
            std::cout << r.spec.name << ": " << r.result.aggregate.completed_requests << " requests, makespan "
                      << format_number(r.result.makespan_us) << " us\n";
        } else if (mix_cmd->parsed()) {
            const MixSpec mix = load_with_overrides(mix_o);
            const auto dir = output_dir(mix_o.out);
            const auto res = run_mix(mix);
            for (const auto& r : res.runs) {
                const auto sub = dir / r.spec.name;
                fs::create_directories(sub);
                write_run_artifacts(sub, r);
            }
            write_report(dir, res.report, mix_o.format);
            auto sw = open_out(dir / "switch_counts.csv");
            write_switch_csv(sw, res.switches);
            write_report_csv(std::cout, res.report);
        } else if (report->parsed()) {
            std::ifstream in(report_in);
            const Report rep = read_report_json(in);
            const auto dir = output_dir(report_out);
            if (report_format == "csv") {
                auto f = open_out(dir / "report.csv");
                write_report_csv(f, rep);
            } else {
                auto f = open_out(dir / "report.json");
                write_report_json(f, rep);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace eclip

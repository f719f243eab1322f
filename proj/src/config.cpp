#include "eclip/harness.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace eclip {

namespace {

template <class T>
T get_or(const toml::node_view<const toml::node>& node, T fallback, const std::string& key) {
    if (!node) return fallback;
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node.value<double>()) return *v;
    } else if constexpr (std::is_integral_v<T>) {
        if (auto v = node.value<int64_t>()) return static_cast<T>(*v);
    } else {
        if (auto v = node.value<std::string>()) return *v;
    }
    throw std::invalid_argument("config: key '" + key + "' has the wrong type");
}

}  // namespace

MixSpec parse_mix_config(const std::string& toml_text, const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config: " << e.description() << " at line " << e.source().begin.line;
        throw std::invalid_argument(msg.str());
    }
    const toml::node_view<const toml::node> r{root};

    MixSpec mix;
    mix.name = get_or<std::string>(r["name"], "mix", "name");
    ScenarioSpec& s = mix.base;
    s.seed = get_or<std::uint64_t>(r["seed"], 1, "seed");
    s.switch_max = get_or<int>(r["switch_max"], s.switch_max, "switch_max");
    s.slowdown_mode = parse_slowdown_mode(get_or<std::string>(r["slowdown_mode"], to_string(s.slowdown_mode), "slowdown_mode"));
    s.arrivals = parse_arrival_process(get_or<std::string>(r["arrivals"], to_string(s.arrivals), "arrivals"));
    s.dispatch_gap_us = get_or<double>(r["dispatch_gap_us"], s.dispatch_gap_us, "dispatch_gap_us");
    s.threshold_tolerance = get_or<double>(r["threshold_tolerance"], s.threshold_tolerance, "threshold_tolerance");
    s.rightsize_factor = get_or<double>(r["rightsize_factor"], s.rightsize_factor, "rightsize_factor");
    if (r["forced_masked_streams"])
        s.forced_masked_streams = get_or<int>(r["forced_masked_streams"], 0, "forced_masked_streams");

    if (auto hw = r["hardware"]) {
        s.hardware.total_cus = get_or<int>(hw["total_cus"], s.hardware.total_cus, "hardware.total_cus");
        s.hardware.se_count = get_or<int>(hw["se_count"], s.hardware.se_count, "hardware.se_count");
        s.hardware.cus_per_se = get_or<int>(hw["cus_per_se"], s.hardware.cus_per_se, "hardware.cus_per_se");
        s.hardware.hw_queue_count = get_or<int>(hw["hw_queue_count"], s.hardware.hw_queue_count, "hardware.hw_queue_count");
    }
    if (auto o = r["overhead"]) {
        auto& m = s.overhead;
        m.ioctl_min_us = get_or<double>(o["ioctl_min_us"], m.ioctl_min_us, "overhead.ioctl_min_us");
        m.ioctl_mode_us = get_or<double>(o["ioctl_mode_us"], m.ioctl_mode_us, "overhead.ioctl_mode_us");
        m.ioctl_max_us = get_or<double>(o["ioctl_max_us"], m.ioctl_max_us, "overhead.ioctl_max_us");
        m.barrier_us = get_or<double>(o["barrier_us"], m.barrier_us, "overhead.barrier_us");
        m.oversub_penalty = get_or<double>(o["oversub_penalty"], m.oversub_penalty, "overhead.oversub_penalty");
    }
    if (auto p = r["power"]) {
        mix.power.idle_w = get_or<double>(p["idle_w"], mix.power.idle_w, "power.idle_w");
        mix.power.max_w = get_or<double>(p["max_w"], mix.power.max_w, "power.max_w");
    }
    if (auto modes = r["modes"].as_array()) {
        mix.modes.clear();
        for (const auto& m : *modes) {
            auto v = m.value<std::string>();
            if (!v) throw std::invalid_argument("config: modes must be strings");
            mix.modes.push_back(parse_partitioning_mode(*v));
        }
    }

    const auto profiles_key = get_or<std::string>(r["profiles"], "", "profiles");
    if (profiles_key.empty()) throw std::invalid_argument("config: 'profiles' path is required");
    std::filesystem::path profiles = profiles_key;
    if (profiles.is_relative()) profiles = base_dir / profiles;
    std::map<std::string, ModelRef> models;
    for (auto& m : load_profiles(profiles, s.hardware)) {
        auto name = m.model_name;
        models[name] = std::make_shared<const ModelProfile>(std::move(m));
    }

    const auto* workers = r["workers"].as_array();
    if (!workers || workers->empty()) throw std::invalid_argument("config: at least one [[workers]] entry is required");
    int index = 0;
    for (const auto& node : *workers) {
        const auto* t = node.as_table();
        if (!t) throw std::invalid_argument("config: [[workers]] entries must be tables");
        const toml::node_view<const toml::node> w{*t};
        WorkerSpec spec;
        spec.worker_id = get_or<int>(w["id"], index, "workers.id");
        const auto model = get_or<std::string>(w["model"], "", "workers.model");
        auto it = models.find(model);
        if (it == models.end())
            throw std::invalid_argument("config: worker " + std::to_string(spec.worker_id) + " uses unknown model '" + model + "'");
        spec.model = it->second;
        spec.arrival_rps = get_or<double>(w["rps"], spec.arrival_rps, "workers.rps");
        spec.request_count = get_or<int>(w["requests"], spec.request_count, "workers.requests");
        s.workers.push_back(std::move(spec));
        ++index;
    }
    mix.validate();
    return mix;
}

MixSpec load_mix_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_mix_config(buf.str(), path.parent_path());
}

}  // namespace eclip

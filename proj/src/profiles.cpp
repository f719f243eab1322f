#include "eclip/profiles.hpp"

#include "eclip/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace eclip {

void HardwareSpec::validate() const {
    if (se_count <= 0 || cus_per_se <= 0)
        throw std::invalid_argument("hardware: se_count and cus_per_se must be positive");
    if (total_cus != se_count * cus_per_se)
        throw std::invalid_argument("hardware: total_cus must equal se_count * cus_per_se");
    if (hw_queue_count < 1) throw std::invalid_argument("hardware: hw_queue_count must be >= 1");
}

std::vector<CuConfig> HardwareSpec::configs() const {
    std::vector<CuConfig> out;
    for (int se = 1; se <= se_count; ++se) out.push_back(CuConfig{se * cus_per_se});
    return out;
}

KernelProfile::KernelProfile(int kernel_id, std::map<CuConfig, Nanos> exec_time)
    : kernel_id_(kernel_id), exec_time_(std::move(exec_time)) {
    if (exec_time_.empty())
        throw ProfileError("kernel " + std::to_string(kernel_id_) + ": no configurations",
                           kernel_id_);
    Nanos prev = 0;
    bool first = true;
    for (const auto& [cfg, t] : exec_time_) {
        if (t <= 0)
            throw ProfileError("kernel " + std::to_string(kernel_id_) +
                                   ": non-positive duration at " +
                                   std::to_string(cfg.cu_count) + " CUs",
                               kernel_id_);
        if (!first && t > prev)
            throw ProfileError("kernel " + std::to_string(kernel_id_) +
                                   ": exec_time increases at " + std::to_string(cfg.cu_count) +
                                   " CUs (profile must be non-increasing in CU count)",
                               kernel_id_);
        prev = t;
        first = false;
    }
}

Nanos KernelProfile::at(CuConfig c) const {
    auto it = exec_time_.find(c);
    if (it == exec_time_.end())
        throw std::out_of_range("kernel " + std::to_string(kernel_id_) + " has no profile at " +
                                std::to_string(c.cu_count) + " CUs");
    return it->second;
}

std::vector<CuConfig> ModelProfile::configs() const {
    std::vector<CuConfig> out;
    if (kernels.empty()) return out;
    for (const auto& [cfg, t] : kernels.front().exec_time()) out.push_back(cfg);
    return out;
}

Nanos ModelProfile::total_at(CuConfig c) const {
    Nanos sum = 0;
    for (const auto& k : kernels) sum += k.at(c);
    return sum;
}

void WorkerSpec::validate() const {
    if (!model) throw std::invalid_argument("worker " + std::to_string(worker_id) + ": no model");
    if (!(arrival_rps > 0.0))
        throw std::invalid_argument("worker " + std::to_string(worker_id) +
                                    ": arrival_rps must be positive");
    if (request_count < 1)
        throw std::invalid_argument("worker " + std::to_string(worker_id) +
                                    ": request_count must be >= 1");
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

struct SectionHeader {
    std::string model;
    int kernels = 0;
    std::vector<CuConfig> configs;
};

SectionHeader parse_header(std::string_view line, int line_no, const HardwareSpec& hw) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ProfileError("line " + std::to_string(line_no) + ": bad header JSON: " + e.what());
    }
    SectionHeader h;
    try {
        h.model = j.at("model").get<std::string>();
        h.kernels = j.at("kernels").get<int>();
        for (int c : j.at("configs").get<std::vector<int>>()) h.configs.push_back(CuConfig{c});
    } catch (const nlohmann::json::exception& e) {
        throw ProfileError("line " + std::to_string(line_no) + ": bad header: " + e.what());
    }
    if (h.kernels < 1)
        throw ProfileError("model " + h.model + ": header must declare at least one kernel");
    for (CuConfig c : hw.configs()) {
        if (std::find(h.configs.begin(), h.configs.end(), c) == h.configs.end())
            throw ProfileError("model " + h.model + ": missing CuConfig column " +
                               std::to_string(c.cu_count));
    }
    for (CuConfig c : h.configs) {
        if (c.cu_count <= 0 || c.cu_count > hw.total_cus || c.cu_count % hw.cus_per_se != 0)
            throw ProfileError("model " + h.model + ": config " + std::to_string(c.cu_count) +
                               " is not SE aligned");
    }
    auto sorted = h.configs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ProfileError("model " + h.model + ": duplicate config column");
    return h;
}

}  // namespace

Nanos parse_us(std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ProfileError("not a decimal duration: '" + std::string(text) + "'");
    if (!std::isfinite(value) || value < 0.0)
        throw ProfileError("duration out of range: '" + std::string(text) + "'");
    return static_cast<Nanos>(std::llround(value * 1000.0));
}

std::string format_us(Nanos ns) {
    const Nanos whole = ns / 1000;
    const Nanos frac = ns % 1000;
    std::string out = std::to_string(whole) + ".";
    std::string f = std::to_string(frac);
    out.append(3 - f.size(), '0');
    out += f;
    return out;
}

std::vector<ModelProfile> parse_profiles(std::istream& in, const HardwareSpec& hw) {
    hw.validate();
    std::vector<ModelProfile> models;
    std::string raw;
    int line_no = 0;
    SectionHeader header;
    bool in_section = false;

    auto finish_section = [&] {
        if (!in_section) return;
        if (static_cast<int>(models.back().kernels.size()) != header.kernels)
            throw ProfileError("model " + header.model + ": header declares " +
                               std::to_string(header.kernels) + " kernels, found " +
                               std::to_string(models.back().kernels.size()));
    };

    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '{') {
            finish_section();
            header = parse_header(line, line_no, hw);
            models.push_back(ModelProfile{header.model, {}});
            in_section = true;
            continue;
        }
        if (!in_section)
            throw ProfileError("line " + std::to_string(line_no) + ": CSV row before header");
        const auto fields = split_csv(line);
        if (fields.size() != header.configs.size() + 1)
            throw ProfileError("model " + header.model + " line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.configs.size() + 1) +
                               " columns, got " + std::to_string(fields.size()) +
                               " (missing CuConfig column)");
        int kernel_id = 0;
        const auto [p, ec] =
            std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), kernel_id);
        if (ec != std::errc{} || p != fields[0].data() + fields[0].size())
            throw ProfileError("model " + header.model + " line " + std::to_string(line_no) +
                               ": bad kernel_id '" + std::string(fields[0]) + "'");
        auto& kernels = models.back().kernels;
        if (kernel_id != static_cast<int>(kernels.size()))
            throw ProfileError("model " + header.model + ": kernel_id " +
                                   std::to_string(kernel_id) + " out of order (expected " +
                                   std::to_string(kernels.size()) + ")",
                               kernel_id);
        if (static_cast<int>(kernels.size()) >= header.kernels)
            throw ProfileError("model " + header.model + ": more rows than declared", kernel_id);
        std::map<CuConfig, Nanos> times;
        for (std::size_t i = 0; i < header.configs.size(); ++i) {
            try {
                times[header.configs[i]] = parse_us(fields[i + 1]);
            } catch (const ProfileError& e) {
                throw ProfileError("model " + header.model + " kernel " +
                                       std::to_string(kernel_id) + ": " + e.what(),
                                   kernel_id);
            }
        }
        try {
            kernels.emplace_back(kernel_id, std::move(times));
        } catch (const ProfileError& e) {
            throw ProfileError("model " + header.model + ": " + e.what(), e.kernel_id());
        }
    }
    finish_section();
    if (models.empty()) throw ProfileError("no profile sections found");
    return models;
}

std::vector<ModelProfile> load_profiles(const std::filesystem::path& path,
                                        const HardwareSpec& hw) {
    std::ifstream in(path);
    if (!in) throw ProfileError("cannot open profile file: " + path.string());
    return parse_profiles(in, hw);
}

void write_profile(std::ostream& out, const ModelProfile& model) {
    const auto configs = model.configs();
    nlohmann::json header;
    header["model"] = model.model_name;
    header["kernels"] = model.kernels.size();
    std::vector<int> cols;
    for (CuConfig c : configs) cols.push_back(c.cu_count);
    header["configs"] = cols;
    out << header.dump() << '\n';
    for (const auto& k : model.kernels) {
        out << k.kernel_id();
        for (CuConfig c : configs) out << ',' << format_us(k.at(c));
        out << '\n';
    }
}

void save_profiles(const std::filesystem::path& path, std::span<const ModelProfile> models) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ProfileError("cannot write profile file: " + path.string());
    for (const auto& m : models) write_profile(out, m);
}

// ---------------------------------------------------------------------------

void KneeDistribution::validate(std::size_t config_count) const {
    if (!knee_weights.empty()) {
        if (knee_weights.size() != config_count)
            throw std::invalid_argument("knee_weights must have one entry per config");
        double total = 0.0;
        for (double w : knee_weights) {
            if (!(w >= 0.0) || !std::isfinite(w))
                throw std::invalid_argument("knee_weights must be finite and non-negative");
            total += w;
        }
        if (!(total > 0.0)) throw std::invalid_argument("knee_weights must not all be zero");
    }
    if (!(knee_persistence >= 0.0 && knee_persistence <= 1.0))
        throw std::invalid_argument("knee_persistence must lie in [0, 1]");
    if (!(min_time_us > 0.0) || !(max_time_us >= min_time_us))
        throw std::invalid_argument("need 0 < min_time_us <= max_time_us");
    if (!(decay > 0.0)) throw std::invalid_argument("decay must be positive");
    if (!(flat_drop >= 0.0 && flat_drop < 0.01))
        throw std::invalid_argument("flat_drop must lie in [0, 0.01)");
}

ModelProfile synthesize_profile(std::string model_name, int kernel_count,
                                const KneeDistribution& knees, std::uint64_t seed,
                                const HardwareSpec& hw) {
    hw.validate();
    const auto configs = hw.configs();
    if (kernel_count < 1) throw std::invalid_argument("kernel_count must be >= 1");
    knees.validate(configs.size());

    std::vector<double> cdf(configs.size());
    if (knees.knee_weights.empty()) {
        std::iota(cdf.begin(), cdf.end(), 1.0);
    } else {
        std::partial_sum(knees.knee_weights.begin(), knees.knee_weights.end(), cdf.begin());
    }
    for (double& v : cdf) v /= cdf.back();

    Rng rng(seed);
    ModelProfile model{std::move(model_name), {}};
    model.kernels.reserve(kernel_count);
    std::size_t prev_knee = 0;
    const double log_lo = std::log(knees.min_time_us);
    const double log_hi = std::log(knees.max_time_us);
    const std::size_t last = configs.size() - 1;

    for (int k = 0; k < kernel_count; ++k) {
        // Always draw the same number of variates per kernel so that changing
        // one parameter does not reshuffle the rest of the stream.
        const double u_persist = rng.uniform();
        const double u_knee = rng.uniform();
        const double u_time = rng.uniform();

        std::size_t knee = 0;
        if (k > 0 && u_persist < knees.knee_persistence) {
            knee = prev_knee;
        } else {
            while (knee < last && u_knee >= cdf[knee]) ++knee;
        }
        prev_knee = knee;

        const double at_knee = std::exp(log_lo + (log_hi - log_lo) * u_time);
        const double knee_cus = configs[knee].cu_count;
        std::map<CuConfig, Nanos> times;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            double t;
            if (i < knee) {
                t = at_knee * std::pow(knee_cus / configs[i].cu_count, knees.decay);
            } else if (last == knee) {
                t = at_knee;
            } else {
                t = at_knee * (1.0 - knees.flat_drop * static_cast<double>(i - knee) /
                                         static_cast<double>(last - knee));
            }
            times[configs[i]] = std::max<Nanos>(1, std::llround(t * 1000.0));
        }
        model.kernels.emplace_back(k, std::move(times));
    }
    return model;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<CuConfig> resolve_allowed(const std::vector<CuConfig>& profiled,
                                      std::span<const CuConfig> allowed) {
    if (allowed.empty()) return profiled;
    std::vector<CuConfig> out(allowed.begin(), allowed.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Nanosecond rounding of decimal inputs must not flip a boundary case.
bool within_budget(double value, double limit) { return value <= limit * (1.0 + 1e-12); }

}  // namespace

CuConfig min_cu_threshold(const KernelProfile& kernel, double slowdown_tolerance,
                          std::span<const CuConfig> allowed) {
    if (!(slowdown_tolerance >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
    std::vector<CuConfig> profiled;
    for (const auto& [c, t] : kernel.exec_time()) profiled.push_back(c);
    const auto configs = resolve_allowed(profiled, allowed);
    const double limit = (1.0 + slowdown_tolerance) * static_cast<double>(kernel.at(configs.back()));
    for (CuConfig c : configs) {
        if (within_budget(static_cast<double>(kernel.at(c)), limit)) return c;
    }
    return configs.back();
}

CuConfig model_wise_rightsize(const ModelProfile& model, double latency_budget_factor,
                              std::span<const CuConfig> allowed) {
    if (!(latency_budget_factor >= 1.0))
        throw std::invalid_argument("latency budget factor must be >= 1");
    if (model.kernels.empty()) throw std::invalid_argument("model has no kernels");
    const auto configs = resolve_allowed(model.configs(), allowed);
    const double limit = latency_budget_factor * static_cast<double>(model.total_at(configs.back()));
    for (CuConfig c : configs) {
        if (within_budget(static_cast<double>(model.total_at(c)), limit)) return c;
    }
    return configs.back();
}

}  // namespace eclip

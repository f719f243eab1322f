#include "eclip/lookup_table.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace eclip {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

const LookupTable::Worker& LookupTable::worker(int worker_id) const {
    for (const auto& w : workers)
        if (w.worker_id == worker_id) return w;
    throw std::out_of_range("lookup table has no worker " + std::to_string(worker_id));
}

CuConfig LookupTable::lookup(int worker_id, int kernel_id) const {
    const auto& w = worker(worker_id);
    if (kernel_id < 0 || kernel_id >= static_cast<int>(w.configs.size()))
        throw std::out_of_range("lookup table: worker " + std::to_string(worker_id) +
                                " has no kernel " + std::to_string(kernel_id));
    return w.configs[static_cast<std::size_t>(kernel_id)];
}

namespace {

json body(const LookupTable& t) {
    json workers = json::array();
    for (const auto& w : t.workers) {
        std::vector<int> cfg;
        cfg.reserve(w.configs.size());
        for (CuConfig c : w.configs) cfg.push_back(c.cu_count);
        workers.push_back(json{{"worker_id", w.worker_id}, {"configs", cfg}});
    }
    return json{{"meta", json{{"mode", t.mode}, {"switch_max", t.switch_max}}},
                {"workers", workers}};
}

}  // namespace

std::string LookupTable::canonical_json() const { return body(*this).dump(); }

std::uint64_t LookupTable::hash() const { return fnv1a64(canonical_json()); }

std::string LookupTable::hash_hex() const {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

std::string LookupTable::to_json() const {
    json j = body(*this);
    j["meta"]["hash"] = hash_hex();
    return j.dump(2) + "\n";
}

LookupTable LookupTable::from_json(const std::string& text) {
    LookupTable t;
    json j;
    try {
        j = json::parse(text);
        t.mode = j.at("meta").at("mode").get<std::string>();
        t.switch_max = j.at("meta").at("switch_max").get<int>();
        for (const auto& w : j.at("workers")) {
            Worker wk;
            wk.worker_id = w.at("worker_id").get<int>();
            for (int c : w.at("configs").get<std::vector<int>>()) wk.configs.push_back(CuConfig{c});
            t.workers.push_back(std::move(wk));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("lookup table: ") + e.what());
    }
    if (j["meta"].contains("hash") && j["meta"]["hash"].get<std::string>() != t.hash_hex())
        throw std::runtime_error("lookup table: hash mismatch (file edited or corrupt)");
    return t;
}

void LookupTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json();
}

LookupTable LookupTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

LookupTable emit_lookup_table(const AllocationPlan& plan, std::span<const WorkerSpec> workers) {
    if (workers.size() != plan.assignment.size())
        throw std::invalid_argument("emit_lookup_table: worker list does not match plan");
    LookupTable t;
    t.mode = to_string(plan.slowdown_mode);
    t.switch_max = plan.switch_max;
    for (std::size_t w = 0; w < plan.assignment.size(); ++w)
        t.workers.push_back({workers[w].worker_id, plan.assignment[w]});
    return t;
}

LookupTable emit_lookup_table(const AllocationPlan& plan) {
    LookupTable t;
    t.mode = to_string(plan.slowdown_mode);
    t.switch_max = plan.switch_max;
    for (std::size_t w = 0; w < plan.assignment.size(); ++w)
        t.workers.push_back({static_cast<int>(w), plan.assignment[w]});
    return t;
}

}  // namespace eclip

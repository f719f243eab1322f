#include "eclip/energy_metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace eclip {

void PowerModel::validate() const {
    if (!(idle_w >= 0.0 && idle_w <= max_w)) throw std::invalid_argument("power model needs 0 <= idle <= max");
}

double power_at(int busy_cus, const PowerModel& model, const HardwareSpec& hw) {
    if (busy_cus < 0 || busy_cus > hw.total_cus)
        throw std::out_of_range("busy CU count " + std::to_string(busy_cus) + " out of range");
    return model.idle_w + (model.max_w - model.idle_w) * static_cast<double>(busy_cus) /
                              static_cast<double>(hw.total_cus);
}

double integrate_energy(std::span<const BusyInterval> intervals, const PowerModel& model,
                        const HardwareSpec& hw) {
    model.validate();
    double joules = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        if (!(iv.t1_us >= iv.t0_us)) throw std::invalid_argument("interval ends before it starts");
        if (i > 0 && iv.t0_us < intervals[i - 1].t1_us)
            throw std::invalid_argument("busy intervals overlap or are unordered");
        joules += power_at(iv.busy_cus, model, hw) * (iv.t1_us - iv.t0_us) * 1e-6;
    }
    return joules;
}

double integrate_energy(const SimTimeline& timeline, const PowerModel& model, const HardwareSpec& hw) {
    return integrate_energy(timeline.intervals, model, hw);
}

double p95_latency(std::span<const double> latencies) {
    if (latencies.empty()) throw std::invalid_argument("p95 of an empty list");
    std::vector<double> sorted(latencies.begin(), latencies.end());
    std::sort(sorted.begin(), sorted.end());
    // ceil(0.95 n) in integers: (95 n + 99) / 100.
    const std::size_t rank = (95 * sorted.size() + 99) / 100;
    return sorted[rank - 1];
}

ScenarioResult compute_result(const std::string& scenario, const SimTimeline& timeline,
                              const PowerModel& power, const HardwareSpec& hw) {
    ScenarioResult res;
    res.scenario = scenario;
    res.worker_ids = timeline.worker_ids;
    res.makespan_us = timeline.makespan_us();
    const double energy = integrate_energy(timeline, power, hw);
    const double seconds = res.makespan_us * 1e-6;
    const std::size_t nw = timeline.worker_ids.size();

    std::vector<std::vector<double>> lat(nw);
    std::vector<double> all;
    res.worker_switches_per_request.assign(nw, 0);
    for (const auto& r : timeline.requests) {
        lat[static_cast<std::size_t>(r.worker)].push_back(r.latency_us());
        all.push_back(r.latency_us());
        auto& s = res.worker_switches_per_request[static_cast<std::size_t>(r.worker)];
        s = std::max(s, r.switches);
    }
    for (int s : res.worker_switches_per_request) res.switches_per_request += s;

    auto row = [&](const std::vector<double>& l) {
        MetricRow m;
        m.completed_requests = static_cast<int>(l.size());
        m.throughput_rps = seconds > 0 ? m.completed_requests / seconds : 0.0;
        m.p95_latency_us = l.empty() ? 0.0 : p95_latency(l);
        m.energy_j = energy;
        m.energy_efficiency = energy > 0 ? m.completed_requests / energy : 0.0;
        return m;
    };
    for (const auto& l : lat) res.per_worker.push_back(row(l));
    res.aggregate = row(all);
    return res;
}

namespace {

NormalizedRow ratio(const MetricRow& m, const MetricRow& base, const std::string& what) {
    auto div = [&](double a, double b, const char* metric) {
        if (b == 0.0) throw std::invalid_argument("baseline " + what + " has zero " + metric);
        return a / b;
    };
    return NormalizedRow{div(m.throughput_rps, base.throughput_rps, "throughput"),
                         div(m.p95_latency_us, base.p95_latency_us, "p95 latency"),
                         div(m.energy_j, base.energy_j, "energy"),
                         div(m.energy_efficiency, base.energy_efficiency, "energy efficiency")};
}

}  // namespace

Report normalize(const std::map<std::string, ScenarioResult>& results, const std::string& baseline,
                 std::vector<std::string> order) {
    auto it = results.find(baseline);
    if (it == results.end()) throw std::invalid_argument("baseline scenario '" + baseline + "' missing");
    const ScenarioResult& base = it->second;
    Report rep;
    rep.baseline = baseline;
    rep.results = results;
    if (order.empty())
        for (const auto& [name, r] : results) order.push_back(name);
    rep.order = std::move(order);
    for (const auto& [name, r] : results) {
        NormalizedResult n;
        n.aggregate = ratio(r.aggregate, base.aggregate, "aggregate");
        if (r.per_worker.size() == base.per_worker.size())
            for (std::size_t w = 0; w < r.per_worker.size(); ++w)
                n.per_worker.push_back(ratio(r.per_worker[w], base.per_worker[w],
                                             "worker " + std::to_string(base.worker_ids[w])));
        rep.normalized[name] = std::move(n);
    }
    return rep;
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_report_csv(std::ostream& out, const Report& report) {
    out << "scenario,worker,completed,rps,p95_us,energy_j,eff_req_per_j,"
           "rps_norm,p95_norm,energy_norm,eff_norm\n";
    auto line = [&](const std::string& scenario, const std::string& worker, const MetricRow& m,
                    const NormalizedRow* n) {
        out << scenario << ',' << worker << ',' << m.completed_requests << ','
            << format_number(m.throughput_rps) << ',' << format_number(m.p95_latency_us) << ','
            << format_number(m.energy_j) << ',' << format_number(m.energy_efficiency);
        if (n) {
            out << ',' << format_number(n->throughput) << ',' << format_number(n->p95_latency) << ','
                << format_number(n->energy) << ',' << format_number(n->energy_efficiency);
        } else {
            out << ",,,,";
        }
        out << '\n';
    };
    for (const auto& name : report.order) {
        const auto& r = report.results.at(name);
        const auto& n = report.normalized.at(name);
        for (std::size_t w = 0; w < r.per_worker.size(); ++w)
            line(name, std::to_string(r.worker_ids[w]), r.per_worker[w],
                 w < n.per_worker.size() ? &n.per_worker[w] : nullptr);
        line(name, "all", r.aggregate, &n.aggregate);
    }
}

namespace {

nlohmann::ordered_json row_json(const MetricRow& m) {
    nlohmann::ordered_json j;
    j["completed"] = m.completed_requests;
    j["rps"] = m.throughput_rps;
    j["p95_us"] = m.p95_latency_us;
    j["energy_j"] = m.energy_j;
    j["eff_req_per_j"] = m.energy_efficiency;
    return j;
}

nlohmann::ordered_json norm_json(const NormalizedRow& n) {
    nlohmann::ordered_json j;
    j["rps_norm"] = n.throughput;
    j["p95_norm"] = n.p95_latency;
    j["energy_norm"] = n.energy;
    j["eff_norm"] = n.energy_efficiency;
    return j;
}

MetricRow row_from(const nlohmann::json& j) {
    MetricRow m;
    m.completed_requests = j.at("completed").get<int>();
    m.throughput_rps = j.at("rps").get<double>();
    m.p95_latency_us = j.at("p95_us").get<double>();
    m.energy_j = j.at("energy_j").get<double>();
    m.energy_efficiency = j.at("eff_req_per_j").get<double>();
    return m;
}

}  // namespace

void write_report_json(std::ostream& out, const Report& report) {
    nlohmann::ordered_json j;
    j["baseline"] = report.baseline;
    j["scenarios"] = nlohmann::ordered_json::array();
    for (const auto& name : report.order) {
        const auto& r = report.results.at(name);
        const auto& n = report.normalized.at(name);
        nlohmann::ordered_json s;
        s["scenario"] = name;
        s["makespan_us"] = r.makespan_us;
        s["switches_per_request"] = r.switches_per_request;
        s["worker_switches_per_request"] = r.worker_switches_per_request;
        s["workers"] = nlohmann::ordered_json::array();
        for (std::size_t w = 0; w < r.per_worker.size(); ++w) {
            auto row = row_json(r.per_worker[w]);
            row["worker"] = r.worker_ids[w];
            if (w < n.per_worker.size()) row["normalized"] = norm_json(n.per_worker[w]);
            s["workers"].push_back(row);
        }
        auto agg = row_json(r.aggregate);
        agg["normalized"] = norm_json(n.aggregate);
        s["aggregate"] = agg;
        j["scenarios"].push_back(s);
    }
    out << j.dump(2) << '\n';
}

Report read_report_json(std::istream& in) {
    std::map<std::string, ScenarioResult> results;
    std::vector<std::string> order;
    std::string baseline;
    try {
        const auto j = nlohmann::json::parse(in);
        baseline = j.at("baseline").get<std::string>();
        for (const auto& s : j.at("scenarios")) {
            ScenarioResult r;
            r.scenario = s.at("scenario").get<std::string>();
            r.makespan_us = s.at("makespan_us").get<double>();
            r.switches_per_request = s.at("switches_per_request").get<int>();
            r.worker_switches_per_request = s.at("worker_switches_per_request").get<std::vector<int>>();
            for (const auto& w : s.at("workers")) {
                r.worker_ids.push_back(w.at("worker").get<int>());
                r.per_worker.push_back(row_from(w));
            }
            r.aggregate = row_from(s.at("aggregate"));
            order.push_back(r.scenario);
            results[r.scenario] = std::move(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("report: ") + e.what());
    }
    return normalize(results, baseline, order);
}

}  // namespace eclip

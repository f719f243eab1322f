#pragma once

#include "eclip/simulator.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace eclip {

/// Whole-GPU power, linear in the fraction of busy CUs. Idle CUs cannot be
/// power gated, so an idle GPU still draws idle_w.
struct PowerModel {
    double idle_w = 75.0;
    double max_w = 225.0;

    void validate() const;
    bool operator==(const PowerModel&) const = default;
};

double power_at(int busy_cus, const PowerModel& model, const HardwareSpec& hw);

/// Exact integral of power over the busy-CU intervals, in joules.
/// Throws on overlapping, unordered or out-of-range intervals.
double integrate_energy(std::span<const BusyInterval> intervals, const PowerModel& model,
                        const HardwareSpec& hw);
double integrate_energy(const SimTimeline& timeline, const PowerModel& model, const HardwareSpec& hw);

/// Nearest-rank 95th percentile.
double p95_latency(std::span<const double> latencies);

struct MetricRow {
    int completed_requests = 0;
    double throughput_rps = 0.0;
    double p95_latency_us = 0.0;
    double energy_j = 0.0;
    double energy_efficiency = 0.0;  ///< requests per joule

    bool operator==(const MetricRow&) const = default;
};

/// Per-worker rows share the whole-GPU makespan and energy, so per-worker
/// throughput and efficiency add up to the aggregate.
struct ScenarioResult {
    std::string scenario;
    std::vector<int> worker_ids;
    std::vector<MetricRow> per_worker;
    MetricRow aggregate;
    double makespan_us = 0.0;
    /// Σ over workers of the per-request switch count of one request.
    int switches_per_request = 0;
    std::vector<int> worker_switches_per_request;

    bool operator==(const ScenarioResult&) const = default;
};

ScenarioResult compute_result(const std::string& scenario, const SimTimeline& timeline,
                              const PowerModel& power, const HardwareSpec& hw);

struct NormalizedRow {
    double throughput = 1.0;
    double p95_latency = 1.0;
    double energy = 1.0;
    double energy_efficiency = 1.0;
};

struct NormalizedResult {
    std::vector<NormalizedRow> per_worker;
    NormalizedRow aggregate;
};

struct Report {
    std::string baseline;
    std::vector<std::string> order;  ///< scenario order for rendering
    std::map<std::string, ScenarioResult> results;
    std::map<std::string, NormalizedResult> normalized;
};

/// Divides every metric by the baseline scenario's. Throws when the baseline
/// is missing or one of its metrics is zero.
Report normalize(const std::map<std::string, ScenarioResult>& results, const std::string& baseline,
                 std::vector<std::string> order = {});

void write_report_csv(std::ostream& out, const Report& report);
void write_report_json(std::ostream& out, const Report& report);
Report read_report_json(std::istream& in);

/// Shortest decimal that round-trips, used in every text artifact.
std::string format_number(double v);

}  // namespace eclip

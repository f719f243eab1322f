#include "eclip/harness.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace eclip {

ScenarioSpec MixSpec::scenario(PartitioningMode mode) const {
    ScenarioSpec s = base;
    s.mode = mode;
    s.name = to_string(mode);
    return s;
}

void MixSpec::validate() const {
    if (modes.empty()) throw std::invalid_argument("mix " + name + ": no scenarios");
    base.validate();
    power.validate();
    auto sorted = modes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("mix " + name + ": duplicate scenario mode");
}

std::vector<CuConfig> allowed_configs(const ScenarioSpec& spec) {
    return pool_configs(spec.worker_count(), spec.hardware);
}

AllocationProblem allocation_problem(const ScenarioSpec& spec) {
    AllocationProblem p;
    p.workers = spec.workers;
    p.hardware = spec.hardware;
    p.switch_max = spec.switch_max;
    p.slowdown_mode = spec.slowdown_mode;
    p.configs = allowed_configs(spec);
    return p;
}

LookupTable plan_for_mode(const ScenarioSpec& spec, AllocationPlan* plan) {
    spec.validate();
    const auto allowed = allowed_configs(spec);
    LookupTable table;
    table.mode = to_string(spec.slowdown_mode);
    table.switch_max = spec.switch_max;

    if (spec.mode == PartitioningMode::Eclip) {
        const AllocationProblem problem = allocation_problem(spec);
        AllocationPlan solved = solve(problem);
        table = emit_lookup_table(solved, problem.workers);
        if (plan) *plan = std::move(solved);
        return table;
    }

    for (const auto& w : spec.workers) {
        const auto& model = *w.model;
        LookupTable::Worker tw;
        tw.worker_id = w.worker_id;
        switch (spec.mode) {
            case PartitioningMode::Baseline:
                tw.configs.assign(model.size(), spec.hardware.max_config());
                break;
            case PartitioningMode::ModelWise:
                tw.configs.assign(model.size(), model_wise_rightsize(model, spec.rightsize_factor, allowed));
                break;
            case PartitioningMode::KernelWiseIoctl:
            case PartitioningMode::KernelWisePrealloc:
                for (const auto& k : model.kernels)
                    tw.configs.push_back(min_cu_threshold(k, spec.threshold_tolerance, allowed));
                break;
            case PartitioningMode::Eclip: break;
        }
        table.workers.push_back(std::move(tw));
    }
    return table;
}

ScenarioRun run_scenario(const ScenarioSpec& spec, const PowerModel& power) {
    ScenarioRun out;
    out.spec = spec;
    AllocationPlan plan;
    out.table = plan_for_mode(spec, &plan);
    if (spec.mode == PartitioningMode::Eclip) out.plan = std::move(plan);
    out.timeline = run(spec, out.table);
    out.result = compute_result(spec.name, out.timeline, power, spec.hardware);
    return out;
}

MixResult run_mix(const MixSpec& mix) {
    mix.validate();
    MixResult out;
    std::map<std::string, ScenarioResult> results;
    std::vector<std::string> order;
    for (PartitioningMode mode : mix.modes) {
        ScenarioRun r = run_scenario(mix.scenario(mode), mix.power);
        results[r.spec.name] = r.result;
        order.push_back(r.spec.name);
        out.switches.push_back(SwitchRow{r.spec.name, r.result.worker_switches_per_request,
                                         r.result.switches_per_request});
        out.runs.push_back(std::move(r));
    }
    const std::string baseline =
        results.count(to_string(PartitioningMode::Baseline)) ? to_string(PartitioningMode::Baseline) : order.front();
    out.report = normalize(results, baseline, order);
    return out;
}

void write_switch_csv(std::ostream& out, const std::vector<SwitchRow>& rows) {
    std::size_t workers = 0;
    for (const auto& r : rows) workers = std::max(workers, r.per_worker.size());
    out << "scenario";
    for (std::size_t w = 0; w < workers; ++w) out << ",worker_" << w;
    out << ",total\n";
    for (const auto& r : rows) {
        out << r.scenario;
        for (std::size_t w = 0; w < workers; ++w) {
            out << ',';
            if (w < r.per_worker.size()) out << r.per_worker[w];
        }
        out << ',' << r.total << '\n';
    }
}

}  // namespace eclip

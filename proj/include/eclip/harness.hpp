#pragma once

#include "eclip/allocator.hpp"
#include "eclip/energy_metrics.hpp"
#include "eclip/lookup_table.hpp"
#include "eclip/scenario.hpp"
#include "eclip/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eclip {

/// Scenarios sharing workers, profiles and seed; only the partitioning mode differs.
struct MixSpec {
    std::string name;
    ScenarioSpec base;  ///< mode field ignored
    std::vector<PartitioningMode> modes{std::begin(kAllModes), std::end(kAllModes)};
    PowerModel power;

    ScenarioSpec scenario(PartitioningMode mode) const;
    void validate() const;
};

/// CU configurations the scenario's stream layout can serve.
std::vector<CuConfig> allowed_configs(const ScenarioSpec& spec);

AllocationProblem allocation_problem(const ScenarioSpec& spec);

/// Lookup table realizing the scenario's partitioning mode. For Eclip the
/// allocator plan is returned through `plan` when non-null.
LookupTable plan_for_mode(const ScenarioSpec& spec, AllocationPlan* plan = nullptr);

struct ScenarioRun {
    ScenarioSpec spec;
    LookupTable table;
    std::optional<AllocationPlan> plan;
    SimTimeline timeline;
    ScenarioResult result;
};

ScenarioRun run_scenario(const ScenarioSpec& spec, const PowerModel& power);

struct SwitchRow {
    std::string scenario;
    std::vector<int> per_worker;  ///< switches in one request of each worker
    int total = 0;
};

struct MixResult {
    std::vector<ScenarioRun> runs;  ///< in mix.modes order
    Report report;                  ///< normalized against baseline when present
    std::vector<SwitchRow> switches;
};

MixResult run_mix(const MixSpec& mix);

void write_switch_csv(std::ostream& out, const std::vector<SwitchRow>& rows);

/// Scenario configuration file (TOML). Relative paths resolve against the
/// file's directory.
MixSpec load_mix_config(const std::filesystem::path& path);
MixSpec parse_mix_config(const std::string& toml_text, const std::filesystem::path& base_dir);

}  // namespace eclip

#pragma once

#include "eclip/profiles.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eclip {

/// How a worker's CU overlap is derived from the per-worker CU averages.
enum class SlowdownMode {
    PaperAsWritten,      ///< own average + Σ others' averages
    ExcludeSelf,         ///< Σ others' averages
    ExcessOverCapacity,  ///< max(0, Σ all averages - total CUs)
};

enum class Scalarization { Sum, MinMax };

std::string to_string(SlowdownMode mode);
SlowdownMode parse_slowdown_mode(std::string_view name);
std::string to_string(Scalarization s);
Scalarization parse_scalarization(std::string_view name);

struct AllocationProblem {
    std::vector<WorkerSpec> workers;
    HardwareSpec hardware;
    int switch_max = 14;
    SlowdownMode slowdown_mode = SlowdownMode::ExcludeSelf;
    std::vector<double> weights;      ///< empty means 1 for every worker
    std::vector<CuConfig> configs;    ///< empty means hardware.configs()
    Scalarization scalarization = Scalarization::Sum;
    int max_rounds = 32;
    /// Upper bound on the number of joint CU-sum combinations swept exactly.
    /// Larger instances fall back to coordinate descent from the solo optimum.
    std::size_t max_joint_sums = 20'000'000;

    void validate() const;
    std::vector<CuConfig> allowed_configs() const;
    double weight(std::size_t w) const { return weights.empty() ? 1.0 : weights[w]; }
};

struct AllocationPlan {
    std::vector<std::vector<CuConfig>> assignment;  ///< per worker, one config per kernel
    std::vector<std::vector<double>> est_exec;      ///< per worker, per kernel, µs
    std::vector<double> cu_average;
    std::vector<double> cu_overlap;
    std::vector<double> alpha;
    std::vector<int> switch_total;
    std::vector<double> objective;  ///< per worker Σ_k est_exec, µs
    double joint_objective = 0.0;   ///< scalarized objective
    SlowdownMode slowdown_mode = SlowdownMode::ExcludeSelf;
    int switch_max = 0;
    bool converged = true;
    int rounds = 0;

    bool operator==(const AllocationPlan&) const = default;
};

/// beta * (1 + alpha).
double estimate_exec(double beta_us, double alpha);

/// overlap / total CUs.
double alpha(double overlap_cus, const HardwareSpec& hw);

/// CU overlap of `worker` computed from the plan's cu_average values.
double cu_overlap(const AllocationPlan& plan, std::size_t worker, SlowdownMode mode,
                  const HardwareSpec& hw);

/// Number of adjacent positions whose configs differ. Throws on an empty list.
int switch_count(std::span<const CuConfig> configs);

struct SingleWorkerSolution {
    std::vector<CuConfig> configs;
    double objective_us = 0.0;
};

/// Exact minimizer of Σ_k β_k(c_k) (1 + alpha) under a switch budget.
/// Among optimal sequences the lexicographically smallest (by CU count) wins.
SingleWorkerSolution dp_single_worker(const ModelProfile& model, double alpha, int switch_max,
                                      const HardwareSpec& hw,
                                      std::span<const CuConfig> allowed = {});

/// Fills every derived field of a plan for the given per-worker assignment.
AllocationPlan evaluate_plan(const AllocationProblem& problem,
                             std::vector<std::vector<CuConfig>> assignment);

AllocationPlan solve(const AllocationProblem& problem);

/// True when no worker can strictly lower the scalarized objective by
/// changing only its own budget-feasible assignment.
bool is_fixed_point(const AllocationProblem& problem, const AllocationPlan& plan);

struct BruteForceResult {
    AllocationPlan plan;
    std::size_t optimal_count = 0;  ///< joint assignments tied with the optimum
};

inline constexpr std::size_t kDefaultMaxJointSize = 10'000'000;

BruteForceResult brute_force_search(const AllocationProblem& problem,
                                     std::size_t max_joint_size = kDefaultMaxJointSize);

AllocationPlan brute_force_solve(const AllocationProblem& problem,
                                 std::size_t max_joint_size = kDefaultMaxJointSize);

}  // namespace eclip

#pragma once

#include "eclip/allocator.hpp"
#include "eclip/profiles.hpp"
#include "eclip/stream_pool.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eclip {

enum class PartitioningMode { Baseline, ModelWise, KernelWiseIoctl, KernelWisePrealloc, Eclip };

inline constexpr PartitioningMode kAllModes[] = {
    PartitioningMode::Baseline, PartitioningMode::ModelWise, PartitioningMode::KernelWiseIoctl,
    PartitioningMode::KernelWisePrealloc, PartitioningMode::Eclip};

std::string to_string(PartitioningMode mode);
PartitioningMode parse_partitioning_mode(std::string_view name);

enum class ArrivalProcess { Deterministic, Poisson };

std::string to_string(ArrivalProcess p);
ArrivalProcess parse_arrival_process(std::string_view name);

struct ScenarioSpec {
    std::string name;
    PartitioningMode mode = PartitioningMode::Baseline;
    std::vector<WorkerSpec> workers;
    HardwareSpec hardware;
    int switch_max = 14;
    SlowdownMode slowdown_mode = SlowdownMode::ExcludeSelf;
    OverheadModel overhead;
    std::uint64_t seed = 1;
    ArrivalProcess arrivals = ArrivalProcess::Deterministic;
    /// Pads the stream pool up to this many masked streams.
    std::optional<int> forced_masked_streams;
    /// Host launch spacing between consecutive kernels of a request.
    double dispatch_gap_us = 0.0;
    double threshold_tolerance = kDefaultSlowdownTolerance;
    double rightsize_factor = kDefaultLatencyBudgetFactor;

    void validate() const;
    int worker_count() const { return static_cast<int>(workers.size()); }
};

}  // namespace eclip

#include "eclip/scenario.hpp"

#include <stdexcept>

namespace eclip {

std::string to_string(PartitioningMode mode) {
    switch (mode) {
        case PartitioningMode::Baseline: return "baseline";
        case PartitioningMode::ModelWise: return "model_wise";
        case PartitioningMode::KernelWiseIoctl: return "kw_ioctl";
        case PartitioningMode::KernelWisePrealloc: return "kw_prealloc";
        case PartitioningMode::Eclip: return "eclip";
    }
    return "unknown";
}

PartitioningMode parse_partitioning_mode(std::string_view name) {
    if (name == "baseline") return PartitioningMode::Baseline;
    if (name == "model_wise" || name == "model-wise") return PartitioningMode::ModelWise;
    if (name == "kw_ioctl" || name == "kw-ioctl") return PartitioningMode::KernelWiseIoctl;
    if (name == "kw_prealloc" || name == "kw-prealloc") return PartitioningMode::KernelWisePrealloc;
    if (name == "eclip") return PartitioningMode::Eclip;
    throw std::invalid_argument("unknown partitioning mode: " + std::string(name));
}

std::string to_string(ArrivalProcess p) {
    return p == ArrivalProcess::Deterministic ? "deterministic" : "poisson";
}

ArrivalProcess parse_arrival_process(std::string_view name) {
    if (name == "deterministic") return ArrivalProcess::Deterministic;
    if (name == "poisson") return ArrivalProcess::Poisson;
    throw std::invalid_argument("unknown arrival process: " + std::string(name));
}

void ScenarioSpec::validate() const {
    hardware.validate();
    overhead.validate();
    if (workers.empty()) throw std::invalid_argument("scenario " + name + ": no workers");
    if (workers.size() > 3)
        throw std::invalid_argument("scenario " + name + ": at most 3 workers are supported");
    for (const auto& w : workers) w.validate();
    for (std::size_t i = 0; i < workers.size(); ++i)
        for (std::size_t j = i + 1; j < workers.size(); ++j)
            if (workers[i].worker_id == workers[j].worker_id)
                throw std::invalid_argument("scenario " + name + ": duplicate worker id");
    if (mode == PartitioningMode::Eclip && switch_max < 0)
        throw std::invalid_argument("scenario " + name + ": switch_max must be >= 0");
    if (dispatch_gap_us < 0) throw std::invalid_argument("dispatch_gap_us must be >= 0");
    if (forced_masked_streams && *forced_masked_streams < 0)
        throw std::invalid_argument("forced_masked_streams must be >= 0");
}

}  // namespace eclip

#pragma once

#include "eclip/allocator.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eclip {

/// Per-kernel CU configuration consumed by the runtime scheduler.
struct LookupTable {
    struct Worker {
        int worker_id = 0;
        std::vector<CuConfig> configs;  ///< indexed by kernel_id

        bool operator==(const Worker&) const = default;
    };

    std::string mode;  ///< slowdown mode the plan was produced under
    int switch_max = 0;
    std::vector<Worker> workers;

    const Worker& worker(int worker_id) const;

    /// Throws std::out_of_range when (worker, kernel) is not covered.
    CuConfig lookup(int worker_id, int kernel_id) const;

    /// FNV-1a over canonical_json().
    std::uint64_t hash() const;
    std::string hash_hex() const;

    /// Serialization without the hash field, compact, keys sorted.
    std::string canonical_json() const;
    std::string to_json() const;
    static LookupTable from_json(const std::string& text);

    void save(const std::filesystem::path& path) const;
    static LookupTable load(const std::filesystem::path& path);

    bool operator==(const LookupTable&) const = default;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Worker ids are taken from the problem in plan order.
LookupTable emit_lookup_table(const AllocationPlan& plan, std::span<const WorkerSpec> workers);

/// Worker ids 0..n-1.
LookupTable emit_lookup_table(const AllocationPlan& plan);

}  // namespace eclip

#pragma once

#include "eclip/lookup_table.hpp"
#include "eclip/profiles.hpp"

#include <bitset>
#include <span>
#include <string>
#include <vector>

namespace eclip {

inline constexpr int kMaxCus = 256;

/// Set of CUs a hardware queue may dispatch to.
class CuMask {
public:
    CuMask() = default;
    explicit CuMask(int total_cus) : total_(total_cus) {}

    static CuMask full(const HardwareSpec& hw);
    /// Mask covering the given zero-based shader engines.
    static CuMask from_ses(std::span<const int> ses, const HardwareSpec& hw);

    int total_cus() const { return total_; }
    int count() const { return static_cast<int>(bits_.count()); }
    bool test(int cu) const { return bits_.test(static_cast<std::size_t>(cu)); }
    void set(int cu) { bits_.set(static_cast<std::size_t>(cu)); }

    int shared_with(const CuMask& other) const { return static_cast<int>((bits_ & other.bits_).count()); }
    CuMask operator|(const CuMask& other) const;
    bool subset_of(const CuMask& other) const { return (bits_ & ~other.bits_).none(); }

    /// Every SE is either fully covered or untouched.
    bool se_aligned(const HardwareSpec& hw) const;
    /// Zero-based SEs that are fully covered.
    std::vector<int> covered_ses(const HardwareSpec& hw) const;

    bool operator==(const CuMask&) const = default;

private:
    std::bitset<kMaxCus> bits_;
    int total_ = 0;
};

/// Zero-based SE indices for `worker`'s mask of `cu_count` CUs when
/// `worker_count` workers share the GPU. 60 CUs is every SE.
std::vector<int> se_layout(int worker, int worker_count, int cu_count, const HardwareSpec& hw);

/// Configurations each worker can be redirected to in a pre-allocated pool.
std::vector<CuConfig> pool_configs(int worker_count, const HardwareSpec& hw);

struct Stream {
    int stream_id = 0;
    int owner = -1;        ///< worker index, -1 for the shared default stream
    CuMask mask;
    bool dynamic = false;  ///< mask reprogrammed per kernel through IOCTL

    bool operator==(const Stream&) const = default;
};

struct StreamPool {
    HardwareSpec hardware;
    int worker_count = 0;
    std::vector<Stream> streams;   ///< streams[0] is the shared default stream
    int padding_streams = 0;       ///< idle masked streams that still occupy HSA queues

    int masked_stream_count() const { return static_cast<int>(streams.size()) - 1 + padding_streams; }
    int hsa_queue_count() const { return static_cast<int>(streams.size()) + padding_streams; }
    const Stream& stream(int stream_id) const;
    const Stream& default_stream() const { return streams.front(); }

    /// Default stream plus, per worker, one masked stream for every non-full
    /// config in configs_per_worker[w].
    static StreamPool with_configs(int worker_count,
                                   const std::vector<std::vector<CuConfig>>& configs_per_worker,
                                   const HardwareSpec& hw);
    /// Default stream plus one dynamically masked stream per worker.
    static StreamPool with_dynamic_streams(int worker_count, const HardwareSpec& hw);

    /// Pads the pool so that it holds `masked` masked streams (never shrinks).
    void force_masked_streams(int masked);
};

/// The pre-allocated layout: 15/30/45 per worker for one or two workers,
/// 30/45 per worker for three, plus the shared 60-CU default stream.
StreamPool build_stream_pool(int worker_count, const HardwareSpec& hw = {});

struct KernelInstance {
    int worker = 0;     ///< index into the scenario's worker list
    int worker_id = 0;
    int request = 0;
    int kernel_id = 0;
};

/// Stream the kernel is moved to. Full-GPU configs go to the shared default stream.
int redirect_kernel(const KernelInstance& kernel, const LookupTable& table, const StreamPool& pool);

/// Mask a kernel runs under on `stream` when assigned `config`.
CuMask mask_for(const StreamPool& pool, int stream_id, int worker, CuConfig config);

struct OverheadModel {
    double ioctl_min_us = 10.0;
    double ioctl_mode_us = 30.0;
    double ioctl_max_us = 55.4;
    double barrier_us = 10.0;
    double oversub_penalty = 0.12;  ///< per HSA queue beyond the hardware queue count

    void validate() const;
    bool operator==(const OverheadModel&) const = default;
};

/// 1 up to hw_queue_count queues, then 1 + penalty per extra queue.
double oversub_factor(int total_hsa_queues, const HardwareSpec& hw, const OverheadModel& model);

}  // namespace eclip

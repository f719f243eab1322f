#pragma once

#include "eclip/lookup_table.hpp"
#include "eclip/scenario.hpp"
#include "eclip/stream_pool.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace eclip {

/// Completion-signal bookkeeping per user stream (one per worker).
class CompletionLedger {
public:
    enum class Signal { Pending, Complete };

    struct Entry {
        int request = 0;
        int kernel_id = 0;
        int stream = 0;
        Signal signal = Signal::Pending;
    };

    explicit CompletionLedger(int user_streams = 0) : entries_(static_cast<std::size_t>(user_streams)) {}

    void log_dispatch(const KernelInstance& k, int stream);
    /// Throws std::logic_error unless this is the oldest pending entry of the user stream.
    void mark_complete(const KernelInstance& k);

    /// Entry immediately preceding `k` in the same request, or nullptr.
    const Entry* predecessor(const KernelInstance& k) const;
    const std::vector<Entry>& entries(int user_stream) const;

private:
    std::vector<std::vector<Entry>> entries_;
};

/// Barrier needed iff the same-request predecessor went to a different stream
/// and its completion signal is still pending.
bool needs_barrier(const KernelInstance& kernel, const CompletionLedger& ledger, int target_stream);

enum class EventType {
    RequestArrival,
    KernelDispatch,
    BarrierEnqueue,
    BarrierRelease,
    KernelStart,
    KernelComplete,
    IoctlStart,
    IoctlEnd,
    RequestComplete,
};

std::string to_string(EventType t);

struct SimEvent {
    double t_us = 0.0;
    EventType type = EventType::RequestArrival;
    int worker = -1;   ///< worker id
    int request = -1;
    int kernel = -1;
    int stream = -1;
    std::string detail;
};

struct BusyInterval {
    double t0_us = 0.0;
    double t1_us = 0.0;
    int busy_cus = 0;
};

struct KernelRecord {
    int worker = 0;  ///< worker index
    int request = 0;
    int kernel = 0;
    int stream = 0;
    CuConfig config;
    CuMask mask;
    double dispatch_us = 0.0;
    double start_us = 0.0;
    double end_us = 0.0;
    bool barrier = false;
    double ioctl_us = 0.0;
};

struct RequestRecord {
    int worker = 0;  ///< worker index
    int request = 0;
    double arrival_us = 0.0;
    double start_us = 0.0;
    double end_us = 0.0;
    int switches = 0;

    double latency_us() const { return end_us - arrival_us; }
};

struct SimTimeline {
    std::vector<int> worker_ids;
    std::vector<SimEvent> events;
    std::vector<BusyInterval> intervals;
    std::vector<KernelRecord> kernels;
    std::vector<RequestRecord> requests;
    double start_us = 0.0;
    double end_us = 0.0;
    int hsa_queue_count = 0;
    double oversub = 1.0;
    int total_cus = 60;

    double makespan_us() const { return end_us - start_us; }

    void write_events(std::ostream& out) const;
    void write_intervals(std::ostream& out) const;
};

/// Pool the given partitioning mode runs on.
StreamPool pool_for_mode(const ScenarioSpec& spec, const LookupTable& table);

SimTimeline run(const ScenarioSpec& scenario, const LookupTable& table, const StreamPool& pool);
SimTimeline run(const ScenarioSpec& scenario, const LookupTable& table);

}  // namespace eclip

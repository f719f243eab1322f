#include "eclip/simulator.hpp"

#include "eclip/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>

namespace eclip {

// ---------------------------------------------------------------------------
// Completion ledger

void CompletionLedger::log_dispatch(const KernelInstance& k, int stream) {
    if (k.worker < 0 || k.worker >= static_cast<int>(entries_.size()))
        throw std::out_of_range("ledger: unknown user stream");
    entries_[static_cast<std::size_t>(k.worker)].push_back(Entry{k.request, k.kernel_id, stream, Signal::Pending});
}

void CompletionLedger::mark_complete(const KernelInstance& k) {
    auto& list = entries_.at(static_cast<std::size_t>(k.worker));
    for (auto& e : list) {
        if (e.signal == Signal::Complete) continue;
        if (e.request != k.request || e.kernel_id != k.kernel_id)
            throw std::logic_error("ledger: completion out of dispatch order");
        e.signal = Signal::Complete;
        return;
    }
    throw std::logic_error("ledger: completing a kernel that was never dispatched");
}

const CompletionLedger::Entry* CompletionLedger::predecessor(const KernelInstance& k) const {
    if (k.kernel_id == 0) return nullptr;
    const auto& list = entries_.at(static_cast<std::size_t>(k.worker));
    for (auto it = list.rbegin(); it != list.rend(); ++it)
        if (it->request == k.request && it->kernel_id == k.kernel_id - 1) return &*it;
    return nullptr;
}

const std::vector<CompletionLedger::Entry>& CompletionLedger::entries(int user_stream) const {
    return entries_.at(static_cast<std::size_t>(user_stream));
}

bool needs_barrier(const KernelInstance& kernel, const CompletionLedger& ledger, int target_stream) {
    const auto* pred = ledger.predecessor(kernel);
    if (pred == nullptr) return false;
    return pred->stream != target_stream && pred->signal == CompletionLedger::Signal::Pending;
}

// ---------------------------------------------------------------------------
// Export

std::string to_string(EventType t) {
    switch (t) {
        case EventType::RequestArrival: return "arrival";
        case EventType::KernelDispatch: return "dispatch";
        case EventType::BarrierEnqueue: return "barrier_enqueue";
        case EventType::BarrierRelease: return "barrier_release";
        case EventType::KernelStart: return "kernel_start";
        case EventType::KernelComplete: return "kernel_complete";
        case EventType::IoctlStart: return "ioctl_start";
        case EventType::IoctlEnd: return "ioctl_end";
        case EventType::RequestComplete: return "request_complete";
    }
    return "unknown";
}

void SimTimeline::write_events(std::ostream& out) const {
    for (const auto& e : events) {
        nlohmann::ordered_json j;
        j["t_us"] = e.t_us;
        j["type"] = to_string(e.type);
        j["worker"] = e.worker;
        j["request"] = e.request;
        j["kernel"] = e.kernel;
        j["stream"] = e.stream;
        j["detail"] = e.detail;
        out << j.dump() << '\n';
    }
}

void SimTimeline::write_intervals(std::ostream& out) const {
    for (const auto& iv : intervals) {
        nlohmann::ordered_json j;
        j["t0_us"] = iv.t0_us;
        j["t1_us"] = iv.t1_us;
        j["busy_cus"] = iv.busy_cus;
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------

StreamPool pool_for_mode(const ScenarioSpec& spec, const LookupTable& table) {
    const int nw = spec.worker_count();
    StreamPool pool;
    switch (spec.mode) {
        case PartitioningMode::Baseline:
            pool = StreamPool::with_configs(nw, std::vector<std::vector<CuConfig>>(static_cast<std::size_t>(nw)),
                                            spec.hardware);
            break;
        case PartitioningMode::ModelWise: {
            std::vector<std::vector<CuConfig>> used;
            for (const auto& w : spec.workers) used.push_back(table.worker(w.worker_id).configs);
            pool = StreamPool::with_configs(nw, used, spec.hardware);
            break;
        }
        case PartitioningMode::KernelWiseIoctl:
            pool = StreamPool::with_dynamic_streams(nw, spec.hardware);
            break;
        case PartitioningMode::KernelWisePrealloc:
        case PartitioningMode::Eclip:
            pool = build_stream_pool(nw, spec.hardware);
            break;
    }
    if (spec.forced_masked_streams) pool.force_masked_streams(*spec.forced_masked_streams);
    return pool;
}

namespace {

constexpr double kInfTime = std::numeric_limits<double>::infinity();

enum class ActionKind { Arrival, Dispatch, Start };

struct Action {
    double t = 0.0;
    std::uint64_t seq = 0;
    ActionKind kind = ActionKind::Arrival;
    int worker = 0;
    int request = 0;
    int kernel = 0;

    bool operator>(const Action& o) const { return t != o.t ? t > o.t : seq > o.seq; }
};

struct Running {
    int worker = 0;
    int request = 0;
    int kernel = 0;
    std::size_t record = 0;
    CuMask mask;
    double remaining = 0.0;  // solo-time units left
    double rate = 1.0;
};

struct WorkerState {
    std::deque<int> backlog;
    int active = -1;
    int next_kernel = 0;
    bool pred_done = true;
    std::vector<int> stream;           // per kernel of the active request
    std::vector<char> dispatched;
    std::vector<char> barrier;
    std::vector<double> dispatch_time;
    std::vector<std::size_t> record;   // per kernel record index, active request
    std::size_t request_record = 0;
};

class Simulation {
public:
    Simulation(const ScenarioSpec& spec, const LookupTable& table, const StreamPool& pool)
        : spec_(spec), table_(table), pool_(pool), ledger_(spec.worker_count()),
          ioctl_rng_(mix_seed(spec.seed, 0x10c71)) {
        spec_.validate();
        if (pool_.worker_count != spec_.worker_count())
            throw std::invalid_argument("stream pool built for a different worker count");
        for (const auto& w : spec_.workers) {
            const auto& tw = table_.worker(w.worker_id);
            if (tw.configs.size() != w.model->size())
                throw std::invalid_argument("lookup table covers " + std::to_string(tw.configs.size()) +
                                            " kernels of worker " + std::to_string(w.worker_id) +
                                            ", model has " + std::to_string(w.model->size()));
            for (std::size_t k = 0; k < tw.configs.size(); ++k) {
                if (w.model->kernels[k].at(tw.configs[k]) <= 0)
                    throw std::invalid_argument("non-positive kernel duration");
            }
        }
        ioctl_mode_ = spec_.mode == PartitioningMode::KernelWiseIoctl;
        timeline_.hsa_queue_count = pool_.hsa_queue_count();
        timeline_.oversub = oversub_factor(timeline_.hsa_queue_count, spec_.hardware, spec_.overhead);
        timeline_.total_cus = spec_.hardware.total_cus;
        for (const auto& w : spec_.workers) timeline_.worker_ids.push_back(w.worker_id);
        workers_.resize(spec_.workers.size());
    }

    SimTimeline run() {
        schedule_arrivals();
        timeline_.start_us = queue_.empty() ? 0.0 : queue_.top().t;
        now_ = timeline_.start_us;

        while (!queue_.empty() || !running_.empty()) {
            const double t_event = queue_.empty() ? kInfTime : queue_.top().t;
            double t_done = kInfTime;
            for (const auto& r : running_) t_done = std::min(t_done, now_ + r.remaining / r.rate);
            const double t_next = std::min(t_event, t_done);
            advance_to(t_next);
            if (t_done <= t_event) {
                complete_finished(t_done);
            } else {
                const Action a = queue_.top();
                queue_.pop();
                handle(a);
            }
        }
        timeline_.end_us = now_;
        return std::move(timeline_);
    }

private:
    void push(double t, ActionKind kind, int worker, int request, int kernel) {
        queue_.push(Action{t, seq_++, kind, worker, request, kernel});
    }

    void event(EventType type, int worker, int request, int kernel, int stream, std::string detail = {}) {
        const int wid = worker >= 0 ? spec_.workers[static_cast<std::size_t>(worker)].worker_id : -1;
        timeline_.events.push_back(SimEvent{now_, type, wid, request, kernel, stream, std::move(detail)});
    }

    void schedule_arrivals() {
        for (std::size_t w = 0; w < spec_.workers.size(); ++w) {
            const auto& ws = spec_.workers[w];
            Rng rng(mix_seed(spec_.seed, 0xa11 + ws.worker_id));
            const double mean_gap = 1e6 / ws.arrival_rps;
            double t = 0.0;
            for (int r = 0; r < ws.request_count; ++r) {
                if (r > 0) {
                    t = spec_.arrivals == ArrivalProcess::Deterministic
                            ? static_cast<double>(r) * mean_gap
                            : t + rng.exponential(1.0 / mean_gap);
                }
                push(t, ActionKind::Arrival, static_cast<int>(w), r, 0);
            }
        }
    }

    int busy_cus() const {
        CuMask u(spec_.hardware.total_cus);
        for (const auto& r : running_) u = u | r.mask;
        return u.count();
    }

    void advance_to(double t) {
        if (t > now_) {
            const int busy = busy_cus();
            auto& iv = timeline_.intervals;
            if (!iv.empty() && iv.back().busy_cus == busy && iv.back().t1_us == now_) {
                iv.back().t1_us = t;
            } else {
                iv.push_back(BusyInterval{now_, t, busy});
            }
            for (auto& r : running_) r.remaining = std::max(0.0, r.remaining - r.rate * (t - now_));
        }
        now_ = std::max(now_, t);
    }

    void recompute_rates() {
        const double total = spec_.hardware.total_cus;
        for (auto& r : running_) {
            int shared = 0;
            for (const auto& o : running_)
                if (&o != &r) shared += r.mask.shared_with(o.mask);
            r.rate = 1.0 / (1.0 + shared / total);
        }
    }

    void complete_finished(double t_done) {
        const double eps = 1e-9 * std::max(1.0, std::abs(t_done));
        std::vector<Running> done;
        std::vector<Running> still;
        for (auto& r : running_) {
            // Remaining is already advanced to now_; a finish time within eps counts.
            if (r.remaining / r.rate <= eps) {
                done.push_back(r);
            } else {
                still.push_back(r);
            }
        }
        if (done.empty()) {
            // Floating point left a sliver; finish the earliest one.
            auto it = std::min_element(running_.begin(), running_.end(), [](const Running& a, const Running& b) {
                return a.remaining / a.rate < b.remaining / b.rate;
            });
            done.push_back(*it);
            running_.erase(it);
        } else {
            running_ = std::move(still);
        }
        std::sort(done.begin(), done.end(), [](const Running& a, const Running& b) { return a.worker < b.worker; });
        recompute_rates();
        for (const auto& r : done) finish_kernel(r);
    }

    void handle(const Action& a) {
        switch (a.kind) {
            case ActionKind::Arrival: {
                auto& ws = workers_[static_cast<std::size_t>(a.worker)];
                event(EventType::RequestArrival, a.worker, a.request, -1, -1);
                RequestRecord rec;
                rec.worker = a.worker;
                rec.request = a.request;
                rec.arrival_us = now_;
                arrivals_[{a.worker, a.request}] = timeline_.requests.size();
                timeline_.requests.push_back(rec);
                ws.backlog.push_back(a.request);
                if (ws.active < 0) begin_request(a.worker);
                break;
            }
            case ActionKind::Dispatch: dispatch(a.worker, a.request, a.kernel); break;
            case ActionKind::Start: start_kernel(a.worker, a.request, a.kernel); break;
        }
    }

    void begin_request(int w) {
        auto& ws = workers_[static_cast<std::size_t>(w)];
        const int r = ws.backlog.front();
        ws.backlog.pop_front();
        const auto& model = *spec_.workers[static_cast<std::size_t>(w)].model;
        const std::size_t n = model.size();
        ws.active = r;
        ws.next_kernel = 0;
        ws.pred_done = true;
        ws.stream.assign(n, -1);
        ws.dispatched.assign(n, 0);
        ws.barrier.assign(n, 0);
        ws.dispatch_time.assign(n, 0.0);
        ws.record.assign(n, 0);
        ws.request_record = arrivals_.at({w, r});
        auto& rec = timeline_.requests[ws.request_record];
        rec.start_us = now_;
        const auto& cfgs = table_.worker(spec_.workers[static_cast<std::size_t>(w)].worker_id).configs;
        rec.switches = ioctl_mode_ ? static_cast<int>(n) : switch_count(cfgs);
        for (std::size_t k = 0; k < n; ++k)
            push(now_ + static_cast<double>(k) * spec_.dispatch_gap_us, ActionKind::Dispatch, w, r, static_cast<int>(k));
    }

    KernelInstance instance(int w, int r, int k) const {
        return KernelInstance{w, spec_.workers[static_cast<std::size_t>(w)].worker_id, r, k};
    }

    void dispatch(int w, int r, int k) {
        auto& ws = workers_[static_cast<std::size_t>(w)];
        const auto ki = instance(w, r, k);
        const int stream = redirect_kernel(ki, table_, pool_);
        const CuConfig cfg = table_.lookup(ki.worker_id, k);
        event(EventType::KernelDispatch, w, r, k, stream, std::to_string(cfg.cu_count));
        const bool barrier = needs_barrier(ki, ledger_, stream);
        ledger_.log_dispatch(ki, stream);
        const auto kk = static_cast<std::size_t>(k);
        ws.stream[kk] = stream;
        ws.dispatched[kk] = 1;
        ws.barrier[kk] = barrier ? 1 : 0;
        ws.dispatch_time[kk] = now_;

        KernelRecord rec;
        rec.worker = w;
        rec.request = r;
        rec.kernel = k;
        rec.stream = stream;
        rec.config = cfg;
        rec.mask = mask_for(pool_, stream, w, cfg);
        rec.dispatch_us = now_;
        rec.barrier = barrier;
        ws.record[kk] = timeline_.kernels.size();
        timeline_.kernels.push_back(rec);

        if (barrier) event(EventType::BarrierEnqueue, w, r, k, stream);
        if (k == ws.next_kernel && ws.pred_done) launch(w);
    }

    // Next kernel of the active request is dispatched and its predecessor is done.
    void launch(int w) {
        auto& ws = workers_[static_cast<std::size_t>(w)];
        const int k = ws.next_kernel;
        const auto kk = static_cast<std::size_t>(k);
        ws.pred_done = false;
        const int stream = ws.stream[kk];
        if (ioctl_mode_) {
            const auto& o = spec_.overhead;
            const double cost = ioctl_rng_.triangular(o.ioctl_min_us, o.ioctl_mode_us, o.ioctl_max_us);
            timeline_.kernels[ws.record[kk]].ioctl_us = cost;
            event(EventType::IoctlStart, w, ws.active, k, stream, std::to_string(cost));
            push(now_ + cost, ActionKind::Start, w, ws.active, k);
        } else if (ws.barrier[kk]) {
            event(EventType::BarrierRelease, w, ws.active, k, stream);
            push(now_ + spec_.overhead.barrier_us, ActionKind::Start, w, ws.active, k);
        } else {
            start_kernel(w, ws.active, k);
        }
    }

    void start_kernel(int w, int r, int k) {
        auto& ws = workers_[static_cast<std::size_t>(w)];
        const auto kk = static_cast<std::size_t>(k);
        auto& rec = timeline_.kernels[ws.record[kk]];
        if (ioctl_mode_) event(EventType::IoctlEnd, w, r, k, rec.stream);
        rec.start_us = now_;
        event(EventType::KernelStart, w, r, k, rec.stream, std::to_string(rec.config.cu_count));
        const auto& model = *spec_.workers[static_cast<std::size_t>(w)].model;
        Running run;
        run.worker = w;
        run.request = r;
        run.kernel = k;
        run.record = ws.record[kk];
        run.mask = rec.mask;
        run.remaining = model.kernels[kk].us(rec.config) * timeline_.oversub;
        running_.push_back(run);
        recompute_rates();
    }

    void finish_kernel(const Running& r) {
        auto& ws = workers_[static_cast<std::size_t>(r.worker)];
        auto& rec = timeline_.kernels[r.record];
        rec.end_us = now_;
        ledger_.mark_complete(instance(r.worker, r.request, r.kernel));
        event(EventType::KernelComplete, r.worker, r.request, r.kernel, rec.stream);
        const auto& model = *spec_.workers[static_cast<std::size_t>(r.worker)].model;
        ++ws.next_kernel;
        if (ws.next_kernel == static_cast<int>(model.size())) {
            timeline_.requests[ws.request_record].end_us = now_;
            event(EventType::RequestComplete, r.worker, r.request, -1, -1);
            ws.active = -1;
            if (!ws.backlog.empty()) begin_request(r.worker);
            return;
        }
        ws.pred_done = true;
        if (ws.dispatched[static_cast<std::size_t>(ws.next_kernel)]) launch(r.worker);
    }

    ScenarioSpec spec_;
    const LookupTable& table_;
    const StreamPool& pool_;
    CompletionLedger ledger_;
    Rng ioctl_rng_;
    bool ioctl_mode_ = false;
    double now_ = 0.0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Action, std::vector<Action>, std::greater<>> queue_;
    std::vector<Running> running_;
    std::vector<WorkerState> workers_;
    std::map<std::pair<int, int>, std::size_t> arrivals_;
    SimTimeline timeline_;
};

}  // namespace

SimTimeline run(const ScenarioSpec& scenario, const LookupTable& table, const StreamPool& pool) {
    return Simulation(scenario, table, pool).run();
}

SimTimeline run(const ScenarioSpec& scenario, const LookupTable& table) {
    scenario.validate();
    const StreamPool pool = pool_for_mode(scenario, table);
    return run(scenario, table, pool);
}

}  // namespace eclip

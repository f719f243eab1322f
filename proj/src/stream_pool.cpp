#include "eclip/stream_pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace eclip {

CuMask CuMask::full(const HardwareSpec& hw) {
    CuMask m(hw.total_cus);
    for (int cu = 0; cu < hw.total_cus; ++cu) m.set(cu);
    return m;
}

CuMask CuMask::from_ses(std::span<const int> ses, const HardwareSpec& hw) {
    CuMask m(hw.total_cus);
    for (int se : ses) {
        if (se < 0 || se >= hw.se_count) throw std::out_of_range("SE index out of range");
        for (int i = 0; i < hw.cus_per_se; ++i) m.set(se * hw.cus_per_se + i);
    }
    return m;
}

CuMask CuMask::operator|(const CuMask& other) const {
    CuMask m(std::max(total_, other.total_));
    m.bits_ = bits_ | other.bits_;
    return m;
}

bool CuMask::se_aligned(const HardwareSpec& hw) const {
    for (int se = 0; se < hw.se_count; ++se) {
        int n = 0;
        for (int i = 0; i < hw.cus_per_se; ++i) n += test(se * hw.cus_per_se + i) ? 1 : 0;
        if (n != 0 && n != hw.cus_per_se) return false;
    }
    return true;
}

std::vector<int> CuMask::covered_ses(const HardwareSpec& hw) const {
    std::vector<int> out;
    for (int se = 0; se < hw.se_count; ++se) {
        bool all = true;
        for (int i = 0; i < hw.cus_per_se && all; ++i) all = test(se * hw.cus_per_se + i);
        if (all) out.push_back(se);
    }
    return out;
}

std::vector<int> se_layout(int worker, int worker_count, int cu_count, const HardwareSpec& hw) {
    if (hw.se_count != 4)
        throw std::invalid_argument("stream layouts are defined for 4 shader engines");
    if (worker < 0 || worker >= worker_count || worker_count < 1 || worker_count > 3)
        throw std::out_of_range("se_layout: worker out of range");
    if (cu_count == hw.total_cus) return {0, 1, 2, 3};
    const int ses = cu_count / hw.cus_per_se;
    // Rows are SEs (zero-based) for 15, 30 and 45 CUs.
    static const std::vector<std::vector<std::vector<int>>> one = {{{0}, {0, 1}, {0, 1, 2}}};
    static const std::vector<std::vector<std::vector<int>>> two = {
        {{0}, {0, 2}, {0, 1, 2}},
        {{3}, {1, 3}, {1, 2, 3}},
    };
    // Three workers have no 15-CU streams; the third worker's masks keep
    // pairwise 45-CU overlap at two SEs for every pair.
    static const std::vector<std::vector<std::vector<int>>> three = {
        {{}, {0, 2}, {0, 1, 2}},
        {{}, {1, 3}, {1, 2, 3}},
        {{}, {0, 3}, {0, 2, 3}},
    };
    const auto& table = worker_count == 1 ? one : worker_count == 2 ? two : three;
    if (ses < 1 || ses > 3 || cu_count % hw.cus_per_se != 0)
        throw std::invalid_argument("no SE layout for " + std::to_string(cu_count) + " CUs");
    const auto& out = table[static_cast<std::size_t>(worker)][static_cast<std::size_t>(ses - 1)];
    if (out.empty())
        throw std::invalid_argument("no " + std::to_string(cu_count) + "-CU stream in a " +
                                    std::to_string(worker_count) + "-worker layout");
    return out;
}

std::vector<CuConfig> pool_configs(int worker_count, const HardwareSpec& hw) {
    auto all = hw.configs();
    if (worker_count >= 3) all.erase(all.begin());
    return all;
}

const Stream& StreamPool::stream(int stream_id) const {
    for (const auto& s : streams)
        if (s.stream_id == stream_id) return s;
    throw std::out_of_range("no stream " + std::to_string(stream_id));
}

StreamPool StreamPool::with_configs(int worker_count,
                                    const std::vector<std::vector<CuConfig>>& configs_per_worker,
                                    const HardwareSpec& hw) {
    hw.validate();
    if (worker_count < 1 || worker_count > 3)
        throw std::invalid_argument("worker_count must be between 1 and 3, got " +
                                    std::to_string(worker_count));
    if (static_cast<int>(configs_per_worker.size()) != worker_count)
        throw std::invalid_argument("need one config list per worker");
    StreamPool pool;
    pool.hardware = hw;
    pool.worker_count = worker_count;
    pool.streams.push_back(Stream{0, -1, CuMask::full(hw), false});
    for (int w = 0; w < worker_count; ++w) {
        auto cfgs = configs_per_worker[static_cast<std::size_t>(w)];
        std::sort(cfgs.begin(), cfgs.end());
        cfgs.erase(std::unique(cfgs.begin(), cfgs.end()), cfgs.end());
        for (CuConfig c : cfgs) {
            if (c.cu_count == hw.total_cus) continue;
            const auto ses = se_layout(w, worker_count, c.cu_count, hw);
            pool.streams.push_back(Stream{static_cast<int>(pool.streams.size()), w,
                                          CuMask::from_ses(ses, hw), false});
        }
    }
    return pool;
}

StreamPool StreamPool::with_dynamic_streams(int worker_count, const HardwareSpec& hw) {
    StreamPool pool = with_configs(worker_count, std::vector<std::vector<CuConfig>>(
                                                     static_cast<std::size_t>(worker_count)),
                                   hw);
    for (int w = 0; w < worker_count; ++w)
        pool.streams.push_back(Stream{static_cast<int>(pool.streams.size()), w, CuMask::full(hw), true});
    return pool;
}

void StreamPool::force_masked_streams(int masked) {
    const int have = static_cast<int>(streams.size()) - 1;
    padding_streams = std::max(padding_streams, masked - have);
}

StreamPool build_stream_pool(int worker_count, const HardwareSpec& hw) {
    if (worker_count < 1 || worker_count > 3)
        throw std::invalid_argument("build_stream_pool: worker_count must be between 1 and 3, got " +
                                    std::to_string(worker_count));
    std::vector<std::vector<CuConfig>> per_worker(static_cast<std::size_t>(worker_count),
                                                  pool_configs(worker_count, hw));
    StreamPool pool = StreamPool::with_configs(worker_count, per_worker, hw);
    if (pool.hsa_queue_count() > hw.hw_queue_count)
        throw std::logic_error("stream pool exceeds the hardware queue count");
    return pool;
}

int redirect_kernel(const KernelInstance& kernel, const LookupTable& table, const StreamPool& pool) {
    const CuConfig cfg = table.lookup(kernel.worker_id, kernel.kernel_id);
    for (const auto& s : pool.streams)
        if (s.dynamic && s.owner == kernel.worker) return s.stream_id;
    if (cfg.cu_count == pool.hardware.total_cus) return pool.default_stream().stream_id;
    for (const auto& s : pool.streams)
        if (s.owner == kernel.worker && s.mask.count() == cfg.cu_count) return s.stream_id;
    throw std::invalid_argument("no " + std::to_string(cfg.cu_count) + "-CU stream for worker " +
                                std::to_string(kernel.worker_id));
}

CuMask mask_for(const StreamPool& pool, int stream_id, int worker, CuConfig config) {
    const Stream& s = pool.stream(stream_id);
    if (!s.dynamic) return s.mask;
    const auto ses = se_layout(worker, pool.worker_count, config.cu_count, pool.hardware);
    return CuMask::from_ses(ses, pool.hardware);
}

void OverheadModel::validate() const {
    if (ioctl_min_us < 0 || barrier_us < 0 || oversub_penalty < 0)
        throw std::invalid_argument("overhead costs must be non-negative");
    if (!(ioctl_min_us <= ioctl_mode_us && ioctl_mode_us <= ioctl_max_us))
        throw std::invalid_argument("ioctl cost needs min <= mode <= max");
}

double oversub_factor(int total_hsa_queues, const HardwareSpec& hw, const OverheadModel& model) {
    if (total_hsa_queues < 1) throw std::invalid_argument("need at least one HSA queue");
    if (total_hsa_queues <= hw.hw_queue_count) return 1.0;
    return 1.0 + model.oversub_penalty * static_cast<double>(total_hsa_queues - hw.hw_queue_count);
}

}  // namespace eclip

#include "sim_helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <set>
#include <sstream>

using namespace eclip;
using namespace helpers;

namespace {

ScenarioSpec two_identical(double beta_us, PartitioningMode mode) {
    ScenarioSpec s;
    s.mode = mode;
    const auto m = flat_kernels({beta_us});
    s.workers = {WorkerSpec{0, m, 10.0, 1}, WorkerSpec{1, m, 10.0, 1}};
    return s;
}

}  // namespace

TEST_CASE("completion ledger and barrier rule") {
    CompletionLedger ledger(1);
    const KernelInstance k0{0, 0, 0, 0}, k1{0, 0, 0, 1}, k2{0, 0, 0, 2};
    CHECK_FALSE(needs_barrier(k0, ledger, 3));
    ledger.log_dispatch(k0, 3);
    CHECK_FALSE(needs_barrier(k1, ledger, 3));
    CHECK(needs_barrier(k1, ledger, 0));
    ledger.log_dispatch(k1, 0);
    CHECK_THROWS_AS(ledger.mark_complete(k1), std::logic_error);
    ledger.mark_complete(k0);
    CHECK(ledger.entries(0)[0].signal == CompletionLedger::Signal::Complete);
    CHECK_FALSE(needs_barrier(k1, ledger, 0));
    CHECK(needs_barrier(k2, ledger, 3));
    ledger.mark_complete(k1);
    CHECK_FALSE(needs_barrier(k2, ledger, 3));
    CHECK_THROWS_AS(ledger.mark_complete(k1), std::logic_error);
}

TEST_CASE("solo request costs the sum of its kernel times") {
    ScenarioSpec s;
    s.mode = PartitioningMode::Eclip;
    s.switch_max = 0;
    const std::vector<double> beta{12.5, 40.125, 7.0, 3.333};
    s.workers = {WorkerSpec{0, flat_kernels(beta), 1.0, 1}};
    const auto table = plan_for_mode(s);
    const auto tl = run(s, table);
    REQUIRE(tl.requests.size() == 1);
    double want = 0;
    for (double b : beta) want += b;
    CHECK(tl.requests[0].latency_us() == doctest::Approx(want).epsilon(1e-12));
    for (const auto& k : tl.kernels) CHECK_FALSE(k.barrier);
}

TEST_CASE("two fully overlapping identical kernels take twice as long") {
    for (auto mode : {PartitioningMode::Baseline, PartitioningMode::Eclip}) {
        auto s = two_identical(100.0, mode);
        const auto table = constant_table(s, {60, 60});
        const auto tl = run(s, table);
        REQUIRE(tl.kernels.size() == 2);
        for (const auto& k : tl.kernels) CHECK(k.end_us - k.start_us == 200.0);
    }
}

TEST_CASE("disjoint masks do not slow each other") {
    auto s = two_identical(100.0, PartitioningMode::KernelWisePrealloc);
    const auto table = constant_table(s, {15, 15});  // SE 0 and SE 3
    const auto tl = run(s, table);
    for (const auto& k : tl.kernels) CHECK(k.end_us - k.start_us == 100.0);
    for (const auto& iv : tl.intervals) CHECK(iv.busy_cus <= 30);
}

TEST_CASE("partial overlap slows by the shared fraction") {
    auto s = two_identical(100.0, PartitioningMode::KernelWisePrealloc);
    const auto table = constant_table(s, {30, 30});  // SEs {0,2} and {1,3}: disjoint
    const auto tl = run(s, table);
    for (const auto& k : tl.kernels) CHECK(k.end_us - k.start_us == 100.0);
    const auto t45 = constant_table(s, {45, 45});  // {0,1,2} and {1,2,3}: 30 shared
    for (const auto& k : run(s, t45).kernels) CHECK(k.end_us - k.start_us == doctest::Approx(150.0));
}

TEST_CASE("forced streams apply the oversubscription penalty") {
    ScenarioSpec s;
    s.mode = PartitioningMode::Baseline;
    s.workers = {WorkerSpec{0, flat_kernels({50.0, 25.0}), 1.0, 1}};
    s.forced_masked_streams = 9;
    const auto tl = run(s, constant_table(s, {60}));
    CHECK(tl.hsa_queue_count == 10);
    CHECK(tl.kernels[0].end_us - tl.kernels[0].start_us == doctest::Approx(50.0 * 1.24).epsilon(1e-12));
    CHECK(tl.kernels[1].end_us - tl.kernels[1].start_us == doctest::Approx(25.0 * 1.24).epsilon(1e-12));
}

TEST_CASE("cross-stream dependency pays one barrier") {
    ScenarioSpec s;
    s.mode = PartitioningMode::KernelWisePrealloc;
    s.workers = {WorkerSpec{0, flat_kernels({20.0, 20.0, 20.0}), 1.0, 1}};
    LookupTable t = constant_table(s, {15});
    t.workers[0].configs = {CuConfig{15}, CuConfig{30}, CuConfig{30}};
    const auto tl = run(s, t);
    CHECK_FALSE(tl.kernels[0].barrier);
    CHECK(tl.kernels[1].barrier);
    CHECK_FALSE(tl.kernels[2].barrier);
    CHECK(tl.kernels[1].start_us == doctest::Approx(tl.kernels[0].end_us + s.overhead.barrier_us));
    CHECK(tl.requests[0].switches == 1);
    CHECK(tl.requests[0].latency_us() == doctest::Approx(60.0 + s.overhead.barrier_us));
}

TEST_CASE("ioctl mode pays a bounded cost before every kernel") {
    ScenarioSpec s;
    s.mode = PartitioningMode::KernelWiseIoctl;
    s.workers = {WorkerSpec{0, flat_kernels({20.0, 20.0, 20.0, 20.0}), 1.0, 3}};
    const auto tl = run(s, constant_table(s, {30}));
    for (const auto& k : tl.kernels) {
        CHECK(k.ioctl_us >= s.overhead.ioctl_min_us);
        CHECK(k.ioctl_us <= s.overhead.ioctl_max_us);
        CHECK_FALSE(k.barrier);
    }
    for (const auto& r : tl.requests) CHECK(r.switches == 4);
}

TEST_CASE("timeline invariants over random scenarios") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 60; ++i) {
        const auto mode = kAllModes[i % 5];
        const auto s = random_scenario(rng, mode);
        const auto table = plan_for_mode(s);
        const auto pool = pool_for_mode(s, table);
        const auto tl = run(s, table, pool);

        CHECK(dependency_violations(tl) == 0);
        int requests = 0;
        for (const auto& w : s.workers) requests += w.request_count;
        CHECK(static_cast<int>(tl.requests.size()) == requests);

        for (std::size_t e = 1; e < tl.events.size(); ++e) CHECK(tl.events[e].t_us >= tl.events[e - 1].t_us);
        for (std::size_t e = 1; e < tl.intervals.size(); ++e) CHECK(tl.intervals[e].t0_us >= tl.intervals[e - 1].t1_us);
        for (const auto& iv : tl.intervals) CHECK(iv.busy_cus <= 60);

        std::map<std::tuple<int, int, int>, const KernelRecord*> by_key;
        for (const auto& k : tl.kernels) by_key[{k.worker, k.request, k.kernel}] = &k;
        for (const auto& k : tl.kernels) {
            CHECK(k.start_us >= k.dispatch_us);
            CHECK(k.end_us > k.start_us);
            if (mode != PartitioningMode::KernelWiseIoctl) CHECK(k.mask.subset_of(pool.stream(k.stream).mask));
            if (k.kernel == 0) {
                CHECK_FALSE(k.barrier);
                continue;
            }
            const auto* pred = by_key.at({k.worker, k.request, k.kernel - 1});
            // A barrier only where the predecessor sat on another stream and was still pending.
            if (k.barrier) {
                CHECK(pred->stream != k.stream);
                CHECK(pred->end_us >= k.dispatch_us);
            } else if (mode != PartitioningMode::KernelWiseIoctl && pred->stream != k.stream) {
                CHECK(pred->end_us <= k.dispatch_us);
            }
        }
        if (mode == PartitioningMode::Baseline)
            for (const auto& k : tl.kernels) CHECK(k.stream == 0);
    }
}

TEST_CASE("simulation is deterministic") {
    std::mt19937_64 rng(9);
    const auto s = random_scenario(rng, PartitioningMode::KernelWiseIoctl);
    const auto table = plan_for_mode(s);
    std::ostringstream a, b;
    run(s, table).write_events(a);
    run(s, table).write_events(b);
    CHECK(a.str() == b.str());
    CHECK_FALSE(a.str().empty());
}

TEST_CASE("scenario validation") {
    ScenarioSpec s;
    CHECK_THROWS(s.validate());  // no workers
    const auto m = flat_kernels({1.0});
    s.workers = {WorkerSpec{0, m, 1.0, 1}, WorkerSpec{0, m, 1.0, 1}};
    CHECK_THROWS(s.validate());  // duplicate ids
    s.workers = {WorkerSpec{0, m, 1.0, 1}, WorkerSpec{1, m, 1.0, 1}, WorkerSpec{2, m, 1.0, 1}, WorkerSpec{3, m, 1.0, 1}};
    CHECK_THROWS(s.validate());
    s.workers.resize(2);
    s.switch_max = -1;
    CHECK_NOTHROW(s.validate());  // only the ECLIP mode reads the budget
    s.mode = PartitioningMode::Eclip;
    CHECK_THROWS(s.validate());
}

TEST_CASE("table and scenario must agree") {
    ScenarioSpec s;
    s.mode = PartitioningMode::Eclip;
    s.workers = {WorkerSpec{0, flat_kernels({1.0, 2.0}), 1.0, 1}};
    LookupTable t = constant_table(s, {30});
    t.workers[0].configs.pop_back();
    CHECK_THROWS(run(s, t));
}

TEST_CASE("event export is one JSON object per line") {
    ScenarioSpec s;
    s.workers = {WorkerSpec{0, flat_kernels({5.0}), 1.0, 2}};
    const auto tl = run(s, constant_table(s, {60}));
    std::ostringstream ev, iv;
    tl.write_events(ev);
    tl.write_intervals(iv);
    std::istringstream in(ev.str());
    std::string line;
    std::set<std::string> types;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto j = nlohmann::json::parse(line);
        for (const char* key : {"t_us", "type", "worker", "request", "kernel", "stream", "detail"}) CHECK(j.contains(key));
        types.insert(j["type"].get<std::string>());
    }
    CHECK(n == static_cast<int>(tl.events.size()));
    CHECK(types.count("kernel_start") == 1);
    CHECK(iv.str().find("busy_cus") != std::string::npos);
}

#include "oracles.hpp"

#include "eclip/energy_metrics.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace eclip;

TEST_CASE("power model") {
    HardwareSpec hw;
    PowerModel p;
    CHECK(power_at(0, p, hw) == 75.0);
    CHECK(power_at(60, p, hw) == 225.0);
    CHECK(power_at(30, p, hw) == 150.0);
    CHECK_THROWS_AS(power_at(61, p, hw), std::out_of_range);
    CHECK_THROWS_AS(power_at(-1, p, hw), std::out_of_range);
    p.idle_w = 300;
    CHECK_THROWS(p.validate());
}

TEST_CASE("energy integration") {
    HardwareSpec hw;
    PowerModel p;
    SUBCASE("idle second") {
        const std::vector<BusyInterval> iv{{0, 1e6, 0}};
        CHECK(integrate_energy(iv, p, hw) == doctest::Approx(75.0).epsilon(1e-12));
    }
    SUBCASE("one full-GPU kernel inside a millisecond") {
        const std::vector<BusyInterval> iv{{0, 500, 0}, {500, 510, 60}, {510, 1000, 0}};
        const double want = 75.0 * 1e-3 + 150.0 * 10e-6;
        CHECK(integrate_energy(iv, p, hw) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("splitting an interval leaves energy unchanged") {
        std::mt19937_64 rng(4);
        for (int i = 0; i < 50; ++i) {
            const double t1 = 1 + (rng() % 10000);
            const double cut = t1 * ((rng() % 999) + 1) / 1000.0;
            const int busy = static_cast<int>(rng() % 61);
            const std::vector<BusyInterval> whole{{0, t1, busy}};
            const std::vector<BusyInterval> split{{0, cut, busy}, {cut, t1, busy}};
            CHECK(integrate_energy(split, p, hw) == doctest::Approx(integrate_energy(whole, p, hw)).epsilon(1e-12));
        }
    }
    SUBCASE("more busy CUs never lowers energy") {
        const std::vector<BusyInterval> a{{0, 100, 15}, {100, 200, 0}};
        const std::vector<BusyInterval> b{{0, 100, 15}, {100, 200, 30}};
        CHECK(integrate_energy(b, p, hw) >= integrate_energy(a, p, hw));
    }
    SUBCASE("rejects bad input") {
        const std::vector<BusyInterval> overlap{{0, 10, 0}, {5, 20, 0}};
        CHECK_THROWS(integrate_energy(overlap, p, hw));
        const std::vector<BusyInterval> backwards{{10, 5, 0}};
        CHECK_THROWS(integrate_energy(backwards, p, hw));
        const std::vector<BusyInterval> too_busy{{0, 5, 90}};
        CHECK_THROWS(integrate_energy(too_busy, p, hw));
    }
}

TEST_CASE("p95 nearest rank") {
    const std::vector<double> one{5};
    CHECK(p95_latency(one) == 5);
    std::vector<double> hundred;
    for (int i = 1; i <= 100; ++i) hundred.push_back(i);
    CHECK(p95_latency(hundred) == 95);
    CHECK_THROWS(p95_latency(std::vector<double>{}));

    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(1 + rng() % 60);
        for (auto& x : v) x = static_cast<double>(rng() % 1000);
        CHECK(p95_latency(v) == oracle::p95_sorted_index(v));
        auto shuffled = v;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(p95_latency(shuffled) == p95_latency(v));
        auto bumped = v;
        bumped[rng() % bumped.size()] += 50;
        CHECK(p95_latency(bumped) >= p95_latency(v));
    }
}

namespace {

ScenarioResult fake(const std::string& name, double rps, double p95, double energy, int completed) {
    ScenarioResult r;
    r.scenario = name;
    r.worker_ids = {0};
    MetricRow m{completed, rps, p95, energy, completed / energy};
    r.per_worker = {m};
    r.aggregate = m;
    r.makespan_us = completed / rps * 1e6;
    r.worker_switches_per_request = {0};
    return r;
}

}  // namespace

TEST_CASE("normalization") {
    std::map<std::string, ScenarioResult> res{{"baseline", fake("baseline", 100, 50, 10, 20)}};
    auto rep = normalize(res, "baseline");
    const auto& n = rep.normalized.at("baseline").aggregate;
    CHECK(n.throughput == 1.0);
    CHECK(n.p95_latency == 1.0);
    CHECK(n.energy == 1.0);
    CHECK(n.energy_efficiency == 1.0);

    res["same"] = fake("same", 100, 50, 10, 20);
    res["better"] = fake("better", 113, 40, 8, 20);
    rep = normalize(res, "baseline");
    CHECK(rep.normalized.at("same").aggregate.throughput == 1.0);
    CHECK(rep.normalized.at("better").aggregate.throughput == doctest::Approx(1.13));
    CHECK(rep.normalized.at("better").aggregate.energy_efficiency == doctest::Approx(1.25));

    CHECK_THROWS(normalize(res, "missing"));
    res["zero"] = fake("zero", 100, 0, 10, 20);
    CHECK_THROWS(normalize(res, "zero"));
}

TEST_CASE("equal requests, less energy, higher efficiency") {
    const auto a = fake("a", 10, 1, 10, 20), b = fake("b", 10, 1, 9, 20);
    CHECK(b.aggregate.energy_efficiency > a.aggregate.energy_efficiency);
}

TEST_CASE("computed results from a timeline") {
    SimTimeline tl;
    tl.worker_ids = {4, 9};
    tl.start_us = 0;
    tl.end_us = 1000;
    tl.intervals = {{0, 400, 60}, {400, 1000, 15}};
    tl.requests = {RequestRecord{0, 0, 0, 0, 300, 2}, RequestRecord{1, 0, 0, 0, 900, 1},
                   RequestRecord{0, 1, 300, 300, 400, 2}};
    const auto r = compute_result("x", tl, PowerModel{}, HardwareSpec{});
    const double energy = oracle::hand_energy(tl.intervals, 75, 225, 60);
    CHECK(r.aggregate.energy_j == doctest::Approx(energy).epsilon(1e-12));
    CHECK(r.aggregate.completed_requests == 3);
    CHECK(r.aggregate.throughput_rps == doctest::Approx(3000.0));
    CHECK(r.per_worker[0].throughput_rps + r.per_worker[1].throughput_rps == doctest::Approx(r.aggregate.throughput_rps));
    CHECK(r.aggregate.energy_efficiency == doctest::Approx(3 / energy));
    CHECK(r.per_worker[0].p95_latency_us == 300);
    CHECK(r.switches_per_request == 3);
}

TEST_CASE("report round-trips through JSON and renders CSV") {
    std::map<std::string, ScenarioResult> res{{"baseline", fake("baseline", 100, 50, 10, 20)},
                                              {"eclip", fake("eclip", 110, 45, 9, 20)}};
    const auto rep = normalize(res, "baseline", {"baseline", "eclip"});
    std::stringstream js;
    write_report_json(js, rep);
    const auto back = read_report_json(js);
    CHECK(back.order == rep.order);
    CHECK(back.results == rep.results);

    std::ostringstream csv;
    write_report_csv(csv, rep);
    const auto text = csv.str();
    CHECK(text.rfind("scenario,worker,completed,rps,p95_us,energy_j,eff_req_per_j,rps_norm,p95_norm,energy_norm,eff_norm\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(format_number(0.1) == "0.1");
}

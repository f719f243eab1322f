#include "oracles.hpp"

#include "eclip/profiles.hpp"

#include <doctest.h>

#include <sstream>

using namespace eclip;

namespace {

KernelProfile kernel(int id, double t15, double t30, double t45, double t60) {
    auto ns = [](double us) { return static_cast<Nanos>(std::llround(us * 1000)); };
    return KernelProfile(id, {{CuConfig{15}, ns(t15)}, {CuConfig{30}, ns(t30)}, {CuConfig{45}, ns(t45)}, {CuConfig{60}, ns(t60)}});
}

// Smallest config whose time is within 1% of the largest config's time.
int knee_of(const KernelProfile& k) {
    const double top = k.us(CuConfig{60});
    for (int c : {15, 30, 45, 60})
        if (k.us(CuConfig{c}) <= 1.01 * top) return c;
    return 60;
}

}  // namespace

TEST_CASE("hardware spec") {
    HardwareSpec hw;
    CHECK(hw.configs() == std::vector<CuConfig>{{15}, {30}, {45}, {60}});
    hw.total_cus = 61;
    CHECK_THROWS_AS(hw.validate(), std::invalid_argument);
    hw = HardwareSpec{};
    hw.hw_queue_count = 0;
    CHECK_THROWS_AS(hw.validate(), std::invalid_argument);
}

TEST_CASE("kernel profile validation") {
    CHECK_NOTHROW(kernel(0, 40, 21, 20, 20));
    CHECK_THROWS_AS(kernel(3, 40, 20, 21, 20), ProfileError);
    try {
        kernel(3, 40, 20, 21, 20);
    } catch (const ProfileError& e) {
        CHECK(e.kernel_id() == 3);
    }
    CHECK_THROWS_AS(kernel(0, 40, 21, 20, 0), ProfileError);
}

TEST_CASE("microsecond strings keep nanosecond precision") {
    CHECK(parse_us("12.345") == 12345);
    CHECK(parse_us("0.001") == 1);
    CHECK(parse_us("7") == 7000);
    CHECK(format_us(12345) == "12.345");
    CHECK(format_us(1) == "0.001");
    for (Nanos n : {Nanos{1}, Nanos{999}, Nanos{1000}, Nanos{123456789}}) CHECK(parse_us(format_us(n)) == n);
    CHECK_THROWS(parse_us("abc"));
    CHECK_THROWS(parse_us("-1"));
}

TEST_CASE("load a minimal profile file") {
    std::istringstream in(R"({"model":"m","kernels":2,"configs":[15,30,45,60]}
0,40,21,20,20
1,10.5,10.5,10.5,10.5
)");
    const auto models = parse_profiles(in);
    REQUIRE(models.size() == 1);
    CHECK(models[0].model_name == "m");
    CHECK(models[0].size() == 2);
    CHECK(models[0].kernels[0].at(CuConfig{30}) == 21000);
}

TEST_CASE("profile file errors") {
    SUBCASE("non-monotone row names its kernel") {
        std::istringstream in(R"({"model":"m","kernels":2,"configs":[15,30,45,60]}
0,40,21,20,20
1,40,20,21,20
)");
        try {
            parse_profiles(in);
            FAIL("expected an error");
        } catch (const ProfileError& e) {
            CHECK(e.kernel_id() == 1);
        }
    }
    SUBCASE("missing config column") {
        std::istringstream in(R"({"model":"m","kernels":1,"configs":[15,30,45]}
0,40,21,20
)");
        CHECK_THROWS_AS(parse_profiles(in), ProfileError);
    }
    SUBCASE("row count disagrees with header") {
        std::istringstream in(R"({"model":"m","kernels":3,"configs":[15,30,45,60]}
0,40,21,20,20
)");
        CHECK_THROWS_AS(parse_profiles(in), ProfileError);
    }
    SUBCASE("garbage header") {
        std::istringstream in("not json\n0,1,1,1,1\n");
        CHECK_THROWS_AS(parse_profiles(in), ProfileError);
    }
}

TEST_CASE("write then parse round-trips") {
    std::mt19937_64 rng(5);
    auto m = oracle::random_model(rng, 9, {15, 30, 45, 60});
    m.model_name = "rt";
    std::ostringstream out;
    write_profile(out, m);
    std::istringstream in(out.str());
    const auto back = parse_profiles(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == m);
}

TEST_CASE("shipped calibration profiles match an independent line count") {
    const std::string path = ECLIP_SOURCE_DIR "/data/calib_profiles.csv";
    std::map<std::string, int> header;
    const auto rows = oracle::count_profile_rows(path, &header);
    const auto models = load_profiles(path);
    REQUIRE(models.size() == 3);
    CHECK(rows.size() == 3);
    for (const auto& m : models) {
        CHECK(static_cast<int>(m.size()) == rows.at(m.model_name));
        CHECK(static_cast<int>(m.size()) == header.at(m.model_name));
    }
}

TEST_CASE("synthesized profiles") {
    SUBCASE("knee at the minimum config is flat") {
        KneeDistribution d;
        d.knee_weights = {1, 0, 0, 0};
        const auto m = synthesize_profile("flat", 1, d, 7);
        const auto& k = m.kernels[0];
        CHECK(k.us(CuConfig{15}) <= 1.01 * k.us(CuConfig{60}));
    }
    SUBCASE("pure function of its arguments") {
        KneeDistribution d;
        std::ostringstream a, b;
        write_profile(a, synthesize_profile("x", 100, d, 42));
        write_profile(b, synthesize_profile("x", 100, d, 42));
        CHECK(a.str() == b.str());
        std::ostringstream c;
        write_profile(c, synthesize_profile("x", 100, d, 43));
        CHECK(a.str() != c.str());
    }
    SUBCASE("strictly decreasing to the knee, flat after") {
        KneeDistribution d;
        const auto m = synthesize_profile("shape", 200, d, 3);
        for (const auto& k : m.kernels) {
            const int knee = knee_of(k);
            for (int c = 15; c < knee; c += 15) CHECK(k.at(CuConfig{c}) > k.at(CuConfig{c + 15}));
            for (int c = knee; c <= 60; c += 15) CHECK(k.us(CuConfig{c}) <= 1.01 * k.us(CuConfig{60}));
        }
    }
    SUBCASE("uniform knees pass a chi-square test") {
        KneeDistribution d;
        const auto m = synthesize_profile("hist", 100, d, 1);
        std::map<int, int> hist;
        for (const auto& k : m.kernels) ++hist[knee_of(k)];
        double chi2 = 0;
        for (int c : {15, 30, 45, 60}) {
            const double obs = hist[c];
            chi2 += (obs - 25.0) * (obs - 25.0) / 25.0;
            CHECK(std::abs(obs / 100.0 - 0.25) <= 0.10);
        }
        CHECK(chi2 < 7.815);  // df = 3, alpha = 0.05
    }
    SUBCASE("invalid parameters") {
        KneeDistribution d;
        CHECK_THROWS(synthesize_profile("x", 0, d, 1));
        d.knee_weights = {1, 1};
        CHECK_THROWS(synthesize_profile("x", 5, d, 1));
        d = KneeDistribution{};
        d.flat_drop = 0.02;
        CHECK_THROWS(synthesize_profile("x", 5, d, 1));
    }
}

TEST_CASE("minimum CU threshold") {
    CHECK(min_cu_threshold(kernel(0, 20, 20, 20, 20), 0.05) == CuConfig{15});
    CHECK(min_cu_threshold(kernel(0, 40, 21, 20, 20), 0.05) == CuConfig{30});
    CHECK(min_cu_threshold(kernel(0, 40, 30, 25, 20), 0.0) == CuConfig{60});
    const std::vector<CuConfig> allowed{{30}, {45}, {60}};
    CHECK(min_cu_threshold(kernel(0, 20, 20, 20, 20), 0.05, allowed) == CuConfig{30});

    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto m = oracle::random_model(rng, 1, {15, 30, 45, 60});
        const double t1 = (rng() % 100) / 1000.0, t2 = t1 + (rng() % 100) / 1000.0;
        CHECK(min_cu_threshold(m.kernels[0], t1) >= min_cu_threshold(m.kernels[0], t2));
        // Predicate evaluated directly.
        const auto& k = m.kernels[0];
        int expect = 60;
        for (int c : {45, 30, 15})
            if (static_cast<double>(k.at(CuConfig{c})) <= (1 + t1) * static_cast<double>(k.at(CuConfig{60}))) expect = c;
            else break;
        // Monotone profiles make the feasible set an upper interval, so scanning down is exact.
        CHECK(min_cu_threshold(k, t1).cu_count == expect);
    }
}

TEST_CASE("model-wise right-size") {
    ModelProfile flat{"flat", {kernel(0, 5, 5, 5, 5), kernel(1, 7, 7, 7, 7)}};
    CHECK(model_wise_rightsize(flat, 3.0) == CuConfig{15});
    ModelProfile steep{"steep", {kernel(0, 5, 5, 5, 5), kernel(1, 70, 50, 30, 10)}};
    CHECK(model_wise_rightsize(steep, 1.0) == CuConfig{60});

    std::mt19937_64 rng(21);
    for (int i = 0; i < 200; ++i) {
        const auto m = oracle::random_model(rng, 3, {15, 30, 45, 60});
        auto total = [&](int c) {
            Nanos s = 0;
            for (const auto& k : m.kernels) s += k.at(CuConfig{c});
            return static_cast<double>(s);
        };
        int expect = 60;
        for (int c : {15, 30, 45, 60})
            if (total(c) <= 3.0 * total(60)) {
                expect = c;
                break;
            }
        CHECK(model_wise_rightsize(m, 3.0).cu_count == expect);
        CHECK(model_wise_rightsize(m, 2.0) >= model_wise_rightsize(m, 4.0));
    }
    CHECK_THROWS(model_wise_rightsize(flat, 0.5));
}

TEST_CASE("worker spec validation") {
    WorkerSpec w;
    w.model = std::make_shared<const ModelProfile>(ModelProfile{"m", {kernel(0, 1, 1, 1, 1)}});
    CHECK_NOTHROW(w.validate());
    w.arrival_rps = 0;
    CHECK_THROWS(w.validate());
    w.arrival_rps = 1;
    w.request_count = 0;
    CHECK_THROWS(w.validate());
}

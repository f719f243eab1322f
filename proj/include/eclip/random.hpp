#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eclip {

// std::*_distribution output differs between standard libraries, so the
// variates below are derived directly from the engine's raw 64-bit output.
// Artifacts stay byte-identical wherever mt19937_64 is available.

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential with the given rate.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Triangular(min, mode, max) by inverse CDF.
    double triangular(double lo, double mode, double hi) {
        if (hi <= lo) return lo;
        const double u = uniform();
        const double split = (mode - lo) / (hi - lo);
        if (u < split) return lo + std::sqrt(u * (hi - lo) * (mode - lo));
        return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - mode));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace eclip

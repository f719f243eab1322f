#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eclip {

/// Durations inside profiles are integral nanoseconds so that sums are exact.
using Nanos = std::int64_t;

inline double to_us(Nanos ns) { return static_cast<double>(ns) / 1000.0; }

/// Number of CUs granted to a kernel. Always a whole number of shader engines.
struct CuConfig {
    int cu_count = 0;

    constexpr auto operator<=>(const CuConfig&) const = default;
};

struct HardwareSpec {
    int total_cus = 60;
    int se_count = 4;
    int cus_per_se = 15;
    int hw_queue_count = 8;

    /// Throws std::invalid_argument when the shape is inconsistent.
    void validate() const;

    /// Every SE-aligned configuration, ascending: {15, 30, 45, 60} by default.
    std::vector<CuConfig> configs() const;

    CuConfig max_config() const { return CuConfig{total_cus}; }
};

class ProfileError : public std::runtime_error {
public:
    explicit ProfileError(const std::string& what, int kernel_id = -1)
        : std::runtime_error(what), kernel_id_(kernel_id) {}

    /// Kernel the error refers to, or -1 when not kernel specific.
    int kernel_id() const { return kernel_id_; }

private:
    int kernel_id_;
};

/// Solo execution time of one kernel at every allowed configuration.
class KernelProfile {
public:
    KernelProfile() = default;

    /// Validates positivity and monotonicity; throws ProfileError naming the kernel.
    KernelProfile(int kernel_id, std::map<CuConfig, Nanos> exec_time);

    int kernel_id() const { return kernel_id_; }
    const std::map<CuConfig, Nanos>& exec_time() const { return exec_time_; }

    /// Throws std::out_of_range for a configuration that was not profiled.
    Nanos at(CuConfig c) const;
    double us(CuConfig c) const { return to_us(at(c)); }

    CuConfig max_config() const { return exec_time_.rbegin()->first; }

    bool operator==(const KernelProfile&) const = default;

private:
    int kernel_id_ = 0;
    std::map<CuConfig, Nanos> exec_time_;
};

/// Kernels of one model, in dependency (FIFO) order.
struct ModelProfile {
    std::string model_name;
    std::vector<KernelProfile> kernels;

    std::size_t size() const { return kernels.size(); }
    std::vector<CuConfig> configs() const;

    /// Σ_k exec_time_k(c).
    Nanos total_at(CuConfig c) const;

    bool operator==(const ModelProfile&) const = default;
};

using ModelRef = std::shared_ptr<const ModelProfile>;

struct WorkerSpec {
    int worker_id = 0;
    ModelRef model;
    double arrival_rps = 1.0;
    int request_count = 1;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Profile file I/O
//
// A profile file holds one or more sections. Each section starts with a JSON
// header line {"model": name, "kernels": N, "configs": [15,30,45,60]} followed
// by N CSV rows: kernel_id, t15, t30, t45, t60 in microseconds.

std::vector<ModelProfile> parse_profiles(std::istream& in, const HardwareSpec& hw = {});
std::vector<ModelProfile> load_profiles(const std::filesystem::path& path,
                                        const HardwareSpec& hw = {});

void write_profile(std::ostream& out, const ModelProfile& model);
void save_profiles(const std::filesystem::path& path, std::span<const ModelProfile> models);

/// Parses a non-negative decimal microsecond string into nanoseconds.
Nanos parse_us(std::string_view text);
/// Inverse of parse_us: exact three-decimal rendering.
std::string format_us(Nanos ns);

// ---------------------------------------------------------------------------
// Synthetic traces

struct KneeDistribution {
    /// Relative probability of each configuration being the knee. Empty means uniform.
    std::vector<double> knee_weights;
    /// Probability that a kernel reuses its predecessor's knee.
    double knee_persistence = 0.0;
    /// Solo time at the knee is log-uniform in [min_time_us, max_time_us].
    double min_time_us = 20.0;
    double max_time_us = 200.0;
    /// Below the knee, t(c) = t_knee * (knee / c)^decay.
    double decay = 1.0;
    /// Total relative drop from the knee to the largest config. Must stay under 1%.
    double flat_drop = 0.005;

    void validate(std::size_t config_count) const;
};

ModelProfile synthesize_profile(std::string model_name, int kernel_count,
                                const KneeDistribution& knees, std::uint64_t seed,
                                const HardwareSpec& hw = {});

// ---------------------------------------------------------------------------
// Right-sizing

inline constexpr double kDefaultSlowdownTolerance = 0.05;
inline constexpr double kDefaultLatencyBudgetFactor = 3.0;

/// Smallest config c in `allowed` with t(c) <= (1 + tolerance) * t(max allowed).
/// An empty `allowed` means every profiled configuration.
CuConfig min_cu_threshold(const KernelProfile& kernel,
                          double slowdown_tolerance = kDefaultSlowdownTolerance,
                          std::span<const CuConfig> allowed = {});

/// Smallest config c with Σ t_k(c) <= factor * Σ t_k(max allowed).
CuConfig model_wise_rightsize(const ModelProfile& model,
                              double latency_budget_factor = kDefaultLatencyBudgetFactor,
                              std::span<const CuConfig> allowed = {});

}  // namespace eclip

#include "eclip/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace eclip {

std::string to_string(SlowdownMode mode) {
    switch (mode) {
        case SlowdownMode::PaperAsWritten: return "paper_as_written";
        case SlowdownMode::ExcludeSelf: return "exclude_self";
        case SlowdownMode::ExcessOverCapacity: return "excess_over_capacity";
    }
    return "unknown";
}

SlowdownMode parse_slowdown_mode(std::string_view name) {
    if (name == "paper_as_written") return SlowdownMode::PaperAsWritten;
    if (name == "exclude_self") return SlowdownMode::ExcludeSelf;
    if (name == "excess_over_capacity" || name == "excess") return SlowdownMode::ExcessOverCapacity;
    throw std::invalid_argument("unknown slowdown mode: " + std::string(name));
}

std::string to_string(Scalarization s) { return s == Scalarization::Sum ? "sum" : "min_max"; }

Scalarization parse_scalarization(std::string_view name) {
    if (name == "sum") return Scalarization::Sum;
    if (name == "min_max" || name == "minmax") return Scalarization::MinMax;
    throw std::invalid_argument("unknown scalarization: " + std::string(name));
}

void AllocationProblem::validate() const {
    hardware.validate();
    if (workers.empty()) throw std::invalid_argument("allocation problem has no workers");
    if (switch_max < 0) throw std::invalid_argument("switch_max must be >= 0");
    if (max_rounds < 1) throw std::invalid_argument("max_rounds must be >= 1");
    if (!weights.empty()) {
        if (weights.size() != workers.size())
            throw std::invalid_argument("need one weight per worker");
        for (double w : weights)
            if (!(w > 0.0) || !std::isfinite(w))
                throw std::invalid_argument("weights must be strictly positive");
    }
    const auto allowed = allowed_configs();
    for (CuConfig c : allowed) {
        if (c.cu_count <= 0 || c.cu_count > hardware.total_cus ||
            c.cu_count % hardware.cus_per_se != 0)
            throw std::invalid_argument("config " + std::to_string(c.cu_count) +
                                        " is not SE aligned");
    }
    for (const auto& w : workers) {
        w.validate();
        if (w.model->kernels.empty())
            throw std::invalid_argument("worker " + std::to_string(w.worker_id) +
                                        ": model has no kernels");
        for (const auto& k : w.model->kernels)
            for (CuConfig c : allowed) (void)k.at(c);
    }
}

std::vector<CuConfig> AllocationProblem::allowed_configs() const {
    std::vector<CuConfig> out = configs.empty() ? hardware.configs() : configs;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double estimate_exec(double beta_us, double alpha) { return beta_us * (1.0 + alpha); }

double alpha(double overlap_cus, const HardwareSpec& hw) {
    return overlap_cus / static_cast<double>(hw.total_cus);
}

int switch_count(std::span<const CuConfig> configs) {
    if (configs.empty()) throw std::invalid_argument("switch_count: empty configuration list");
    int n = 0;
    for (std::size_t k = 1; k < configs.size(); ++k)
        if (configs[k] != configs[k - 1]) ++n;
    return n;
}

namespace {

constexpr Nanos kInf = std::numeric_limits<Nanos>::max() / 4;

double overlap_from_averages(std::span<const double> avg, std::size_t w, SlowdownMode mode,
                             const HardwareSpec& hw) {
    double others = 0.0;
    for (std::size_t i = 0; i < avg.size(); ++i)
        if (i != w) others += avg[i];
    switch (mode) {
        case SlowdownMode::PaperAsWritten: return avg[w] + others;
        case SlowdownMode::ExcludeSelf: return others;
        case SlowdownMode::ExcessOverCapacity: {
            double all = 0.0;
            for (double a : avg) all += a;
            return std::max(0.0, all - static_cast<double>(hw.total_cus));
        }
    }
    return 0.0;
}

struct WorkerTotals {
    Nanos base = 0;          // Σ_k β_k
    long long cu_sum = 0;    // Σ_k c_k
    std::size_t kernels = 0;
};

struct Score {
    std::vector<double> average;
    std::vector<double> overlap;
    std::vector<double> alpha;
    std::vector<double> per_worker;
    double scalar = 0.0;
};

// The single place where the objective is evaluated. Every search path
// (sweep, coordinate descent, brute force) goes through it, so equal
// (base, cu_sum) vectors always compare bit-identical.
Score score(const AllocationProblem& p, std::span<const WorkerTotals> totals) {
    Score s;
    const std::size_t n = totals.size();
    s.average.resize(n);
    for (std::size_t w = 0; w < n; ++w)
        s.average[w] = static_cast<double>(totals[w].cu_sum) / static_cast<double>(totals[w].kernels);
    s.overlap.resize(n);
    s.alpha.resize(n);
    s.per_worker.resize(n);
    for (std::size_t w = 0; w < n; ++w) {
        s.overlap[w] = overlap_from_averages(s.average, w, p.slowdown_mode, p.hardware);
        s.alpha[w] = alpha(s.overlap[w], p.hardware);
        s.per_worker[w] = estimate_exec(to_us(totals[w].base), s.alpha[w]);
    }
    if (p.scalarization == Scalarization::Sum) {
        for (std::size_t w = 0; w < n; ++w) s.scalar += p.weight(w) * s.per_worker[w];
    } else {
        s.scalar = -std::numeric_limits<double>::infinity();
        for (std::size_t w = 0; w < n; ++w) s.scalar = std::max(s.scalar, p.weight(w) * s.per_worker[w]);
    }
    return s;
}

int config_unit(std::span<const CuConfig> configs) {
    int g = 0;
    for (CuConfig c : configs) g = std::gcd(g, c.cu_count);
    return g;
}

std::vector<std::vector<Nanos>> beta_table(const ModelProfile& model,
                                           std::span<const CuConfig> configs) {
    std::vector<std::vector<Nanos>> beta(model.size(), std::vector<Nanos>(configs.size()));
    for (std::size_t k = 0; k < model.size(); ++k)
        for (std::size_t c = 0; c < configs.size(); ++c) beta[k][c] = model.kernels[k].at(configs[c]);
    return beta;
}

// Cheapest budget-feasible sequence for every achievable CU total. Backward
// DP over (kernel, config, switches used so far, CU units still to place);
// the stored choice is the smallest next config reaching the optimum, so a
// forward walk reproduces the lexicographically smallest optimal sequence.
class SumFrontier {
public:
    SumFrontier(const ModelProfile& model, std::span<const CuConfig> configs, int switch_max)
        : configs_(configs.begin(), configs.end()) {
        n_ = model.size();
        c_ = configs_.size();
        unit_ = config_unit(configs_);
        units_.resize(c_);
        for (std::size_t c = 0; c < c_; ++c) units_[c] = configs_[c].cu_count / unit_;
        s_ = static_cast<std::size_t>(std::min<long long>(switch_max, static_cast<long long>(n_) - 1)) + 1;
        r_ = static_cast<std::size_t>(units_.back()) * n_ + 1;
        const auto beta = beta_table(model, configs_);

        const std::size_t layer = c_ * s_ * r_;
        if (n_ > 1) choice_.assign((n_ - 1) * layer, 0);
        std::vector<Nanos> next(layer, kInf), cur(layer, kInf);

        for (std::size_t c = 0; c < c_; ++c)
            for (std::size_t s = 0; s < s_; ++s) next[idx(c, s, units_[c])] = beta[n_ - 1][c];

        for (std::size_t k = n_ - 1; k-- > 0;) {
            std::fill(cur.begin(), cur.end(), kInf);
            const std::size_t max_r = static_cast<std::size_t>(units_.back()) * (n_ - k);
            for (std::size_t c = 0; c < c_; ++c) {
                const auto uc = static_cast<std::size_t>(units_[c]);
                for (std::size_t s = 0; s < s_; ++s) {
                    for (std::size_t r = uc; r <= max_r; ++r) {
                        Nanos best = kInf;
                        std::uint8_t arg = 0;
                        for (std::size_t c2 = 0; c2 < c_; ++c2) {
                            const std::size_t s2 = s + (c2 != c ? 1 : 0);
                            if (s2 >= s_) continue;
                            const Nanos v = next[idx(c2, s2, r - uc)];
                            if (v < best) {
                                best = v;
                                arg = static_cast<std::uint8_t>(c2);
                            }
                        }
                        if (best >= kInf) continue;
                        cur[idx(c, s, r)] = beta[k][c] + best;
                        choice_[k * layer + idx(c, s, r)] = arg;
                    }
                }
            }
            std::swap(cur, next);
        }
        head_.assign(r_, kInf);
        head_config_.assign(r_, 0);
        for (std::size_t r = 0; r < r_; ++r) {
            for (std::size_t c = 0; c < c_; ++c) {
                const Nanos v = next[idx(c, 0, r)];
                if (v < head_[r]) {
                    head_[r] = v;
                    head_config_[r] = c;
                }
            }
            if (head_[r] < kInf) feasible_.push_back(static_cast<int>(r));
        }
    }

    int unit() const { return unit_; }
    const std::vector<int>& feasible_units() const { return feasible_; }
    Nanos best(int units) const { return head_[static_cast<std::size_t>(units)]; }

    std::vector<CuConfig> sequence(int units) const {
        std::vector<CuConfig> out;
        out.reserve(n_);
        auto r = static_cast<std::size_t>(units);
        std::size_t c = head_config_[r];
        std::size_t s = 0;
        const std::size_t layer = c_ * s_ * r_;
        for (std::size_t k = 0; k < n_; ++k) {
            out.push_back(configs_[c]);
            if (k + 1 == n_) break;
            const std::size_t c2 = choice_[k * layer + idx(c, s, r)];
            r -= static_cast<std::size_t>(units_[c]);
            s += (c2 != c) ? 1 : 0;
            c = c2;
        }
        return out;
    }

private:
    std::size_t idx(std::size_t c, std::size_t s, std::size_t r) const { return (c * s_ + s) * r_ + r; }

    std::vector<CuConfig> configs_;
    std::vector<int> units_;
    std::size_t n_ = 0, c_ = 0, s_ = 0, r_ = 0;
    int unit_ = 1;
    std::vector<std::uint8_t> choice_;
    std::vector<Nanos> head_;
    std::vector<std::size_t> head_config_;
    std::vector<int> feasible_;
};

WorkerTotals totals_of(const ModelProfile& model, std::span<const CuConfig> seq) {
    WorkerTotals t;
    t.kernels = model.size();
    for (std::size_t k = 0; k < seq.size(); ++k) {
        t.base += model.kernels[k].at(seq[k]);
        t.cu_sum += seq[k].cu_count;
    }
    return t;
}

struct BestResponse {
    bool improves = false;
    int units = 0;
    double scalar = 0.0;
};

BestResponse best_response(const AllocationProblem& p, const SumFrontier& frontier,
                           std::vector<WorkerTotals> totals, std::size_t w) {
    const double current = score(p, totals).scalar;
    BestResponse out;
    out.scalar = current;
    for (int u : frontier.feasible_units()) {
        totals[w].base = frontier.best(u);
        totals[w].cu_sum = static_cast<long long>(u) * frontier.unit();
        const double v = score(p, totals).scalar;
        if (v < out.scalar) {
            out.scalar = v;
            out.units = u;
            out.improves = true;
        }
    }
    return out;
}

std::vector<SumFrontier> build_frontiers(const AllocationProblem& p) {
    const auto configs = p.allowed_configs();
    if (configs.size() > std::numeric_limits<std::uint8_t>::max())
        throw std::invalid_argument("too many CU configurations");
    std::vector<SumFrontier> out;
    out.reserve(p.workers.size());
    for (const auto& w : p.workers) out.emplace_back(*w.model, configs, p.switch_max);
    return out;
}

}  // namespace

double cu_overlap(const AllocationPlan& plan, std::size_t worker, SlowdownMode mode,
                  const HardwareSpec& hw) {
    if (worker >= plan.cu_average.size())
        throw std::out_of_range("cu_overlap: unknown worker " + std::to_string(worker));
    return overlap_from_averages(plan.cu_average, worker, mode, hw);
}

SingleWorkerSolution dp_single_worker(const ModelProfile& model, double alpha_value,
                                      int switch_max, const HardwareSpec& hw,
                                      std::span<const CuConfig> allowed) {
    if (switch_max < 0) throw std::invalid_argument("switch_max must be >= 0");
    if (model.kernels.empty()) throw std::invalid_argument("model has no kernels");
    std::vector<CuConfig> configs(allowed.begin(), allowed.end());
    if (configs.empty()) configs = hw.configs();
    std::sort(configs.begin(), configs.end());
    configs.erase(std::unique(configs.begin(), configs.end()), configs.end());

    const std::size_t n = model.size();
    const std::size_t nc = configs.size();
    const std::size_t ns = static_cast<std::size_t>(std::min<long long>(switch_max, static_cast<long long>(n) - 1)) + 1;
    const auto beta = beta_table(model, configs);

    // cost[k][c][s]: cheapest completion of kernels k.. with kernel k at c and
    // s switches already spent.
    auto at = [&](std::size_t k, std::size_t c, std::size_t s) { return (k * nc + c) * ns + s; };
    std::vector<Nanos> cost(n * nc * ns, kInf);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t s = 0; s < ns; ++s) cost[at(n - 1, c, s)] = beta[n - 1][c];
    for (std::size_t k = n - 1; k-- > 0;) {
        for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t s = 0; s < ns; ++s) {
                Nanos best = kInf;
                for (std::size_t c2 = 0; c2 < nc; ++c2) {
                    const std::size_t s2 = s + (c2 != c ? 1 : 0);
                    if (s2 >= ns) continue;
                    best = std::min(best, cost[at(k + 1, c2, s2)]);
                }
                if (best < kInf) cost[at(k, c, s)] = beta[k][c] + best;
            }
        }
    }

    SingleWorkerSolution out;
    std::size_t c = 0;
    for (std::size_t c0 = 1; c0 < nc; ++c0)
        if (cost[at(0, c0, 0)] < cost[at(0, c, 0)]) c = c0;
    const Nanos total = cost[at(0, c, 0)];
    std::size_t s = 0;
    out.configs.push_back(configs[c]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const Nanos target = cost[at(k, c, s)] - beta[k][c];
        for (std::size_t c2 = 0; c2 < nc; ++c2) {
            const std::size_t s2 = s + (c2 != c ? 1 : 0);
            if (s2 < ns && cost[at(k + 1, c2, s2)] == target) {
                s = s2;
                c = c2;
                break;
            }
        }
        out.configs.push_back(configs[c]);
    }
    out.objective_us = estimate_exec(to_us(total), alpha_value);
    return out;
}

AllocationPlan evaluate_plan(const AllocationProblem& problem,
                             std::vector<std::vector<CuConfig>> assignment) {
    if (assignment.size() != problem.workers.size())
        throw std::invalid_argument("assignment must cover every worker");
    std::vector<WorkerTotals> totals;
    for (std::size_t w = 0; w < assignment.size(); ++w) {
        const auto& model = *problem.workers[w].model;
        if (assignment[w].size() != model.size())
            throw std::invalid_argument("worker " + std::to_string(problem.workers[w].worker_id) +
                                        ": assignment must have one config per kernel");
        totals.push_back(totals_of(model, assignment[w]));
    }
    const Score s = score(problem, totals);

    AllocationPlan plan;
    plan.slowdown_mode = problem.slowdown_mode;
    plan.switch_max = problem.switch_max;
    plan.cu_average = s.average;
    plan.cu_overlap = s.overlap;
    plan.alpha = s.alpha;
    plan.objective = s.per_worker;
    plan.joint_objective = s.scalar;
    for (std::size_t w = 0; w < assignment.size(); ++w) {
        const auto& model = *problem.workers[w].model;
        std::vector<double> est;
        est.reserve(model.size());
        for (std::size_t k = 0; k < model.size(); ++k)
            est.push_back(estimate_exec(model.kernels[k].us(assignment[w][k]), s.alpha[w]));
        plan.est_exec.push_back(std::move(est));
        plan.switch_total.push_back(switch_count(assignment[w]));
    }
    plan.assignment = std::move(assignment);
    return plan;
}

AllocationPlan solve(const AllocationProblem& problem) {
    problem.validate();
    const std::size_t nw = problem.workers.size();
    const auto frontiers = build_frontiers(problem);

    std::vector<std::vector<CuConfig>> assignment(nw);
    std::vector<WorkerTotals> totals(nw);

    double joint_space = 1.0;
    for (const auto& f : frontiers) joint_space *= static_cast<double>(f.feasible_units().size());

    if (joint_space <= static_cast<double>(problem.max_joint_sums)) {
        // For a fixed vector of per-worker CU totals every alpha is fixed, so
        // each worker independently takes its cheapest sequence with that
        // total. Sweeping all total vectors therefore yields the global optimum.
        std::vector<std::size_t> digit(nw, 0);
        std::vector<WorkerTotals> probe(nw);
        for (std::size_t w = 0; w < nw; ++w) probe[w].kernels = problem.workers[w].model->size();
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> best_units(nw, 0);
        while (true) {
            for (std::size_t w = 0; w < nw; ++w) {
                const int u = frontiers[w].feasible_units()[digit[w]];
                probe[w].base = frontiers[w].best(u);
                probe[w].cu_sum = static_cast<long long>(u) * frontiers[w].unit();
            }
            const double v = score(problem, probe).scalar;
            if (v < best) {
                best = v;
                for (std::size_t w = 0; w < nw; ++w) best_units[w] = frontiers[w].feasible_units()[digit[w]];
            }
            std::size_t w = nw;
            while (w-- > 0) {
                if (++digit[w] < frontiers[w].feasible_units().size()) break;
                digit[w] = 0;
            }
            if (w == static_cast<std::size_t>(-1)) break;
        }
        for (std::size_t w = 0; w < nw; ++w) assignment[w] = frontiers[w].sequence(best_units[w]);
    } else {
        for (std::size_t w = 0; w < nw; ++w)
            assignment[w] = dp_single_worker(*problem.workers[w].model, 0.0, problem.switch_max,
                                             problem.hardware, problem.allowed_configs())
                                .configs;
    }
    for (std::size_t w = 0; w < nw; ++w) totals[w] = totals_of(*problem.workers[w].model, assignment[w]);

    // Coordinate descent in worker order until no worker can improve.
    bool converged = false;
    int rounds = 0;
    while (rounds < problem.max_rounds) {
        ++rounds;
        bool changed = false;
        for (std::size_t w = 0; w < nw; ++w) {
            const BestResponse br = best_response(problem, frontiers[w], totals, w);
            if (!br.improves) continue;
            assignment[w] = frontiers[w].sequence(br.units);
            totals[w] = totals_of(*problem.workers[w].model, assignment[w]);
            changed = true;
        }
        if (!changed) {
            converged = true;
            break;
        }
    }

    AllocationPlan plan = evaluate_plan(problem, std::move(assignment));
    plan.converged = converged;
    plan.rounds = rounds;
    return plan;
}

bool is_fixed_point(const AllocationProblem& problem, const AllocationPlan& plan) {
    problem.validate();
    if (plan.assignment.size() != problem.workers.size()) return false;
    const auto frontiers = build_frontiers(problem);
    std::vector<WorkerTotals> totals;
    for (std::size_t w = 0; w < problem.workers.size(); ++w) {
        const auto& model = *problem.workers[w].model;
        if (plan.assignment[w].size() != model.size()) return false;
        if (switch_count(plan.assignment[w]) > problem.switch_max) return false;
        totals.push_back(totals_of(model, plan.assignment[w]));
    }
    for (std::size_t w = 0; w < problem.workers.size(); ++w)
        if (best_response(problem, frontiers[w], totals, w).improves) return false;
    return true;
}

BruteForceResult brute_force_search(const AllocationProblem& problem, std::size_t max_joint_size) {
    problem.validate();
    const auto configs = problem.allowed_configs();
    const std::size_t nw = problem.workers.size();

    double raw_space = 1.0;
    for (const auto& w : problem.workers)
        raw_space *= std::pow(static_cast<double>(configs.size()), static_cast<double>(w.model->size()));
    if (raw_space > static_cast<double>(max_joint_size))
        throw std::length_error("brute_force_solve: instance too large (" +
                                std::to_string(raw_space) + " joint assignments)");

    // Budget-feasible sequences per worker in lexicographic order.
    struct Candidate {
        std::vector<CuConfig> seq;
        WorkerTotals totals;
    };
    std::vector<std::vector<Candidate>> candidates(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        const auto& model = *problem.workers[w].model;
        const std::size_t n = model.size();
        std::vector<std::size_t> digit(n, 0);
        while (true) {
            std::vector<CuConfig> seq(n);
            for (std::size_t k = 0; k < n; ++k) seq[k] = configs[digit[k]];
            if (switch_count(seq) <= problem.switch_max) {
                Candidate cand{seq, {}};
                cand.totals.kernels = n;
                for (std::size_t k = 0; k < n; ++k) {
                    cand.totals.base += model.kernels[k].at(seq[k]);
                    cand.totals.cu_sum += seq[k].cu_count;
                }
                candidates[w].push_back(std::move(cand));
            }
            std::size_t k = n;
            while (k-- > 0) {
                if (++digit[k] < configs.size()) break;
                digit[k] = 0;
            }
            if (k == static_cast<std::size_t>(-1)) break;
        }
    }

    auto sweep = [&](auto&& visit) {
        std::vector<std::size_t> digit(nw, 0);
        std::vector<WorkerTotals> totals(nw);
        while (true) {
            for (std::size_t w = 0; w < nw; ++w) totals[w] = candidates[w][digit[w]].totals;
            visit(digit, score(problem, totals).scalar);
            std::size_t w = nw;
            while (w-- > 0) {
                if (++digit[w] < candidates[w].size()) break;
                digit[w] = 0;
            }
            if (w == static_cast<std::size_t>(-1)) break;
        }
    };

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_digit;
    sweep([&](const std::vector<std::size_t>& d, double v) {
        if (v < best) {
            best = v;
            best_digit = d;
        }
    });
    const double tie_band = std::abs(best) * 1e-12;
    std::size_t ties = 0;
    sweep([&](const std::vector<std::size_t>&, double v) {
        if (v <= best + tie_band) ++ties;
    });

    std::vector<std::vector<CuConfig>> assignment(nw);
    for (std::size_t w = 0; w < nw; ++w) assignment[w] = candidates[w][best_digit[w]].seq;
    BruteForceResult out{evaluate_plan(problem, std::move(assignment)), ties};
    out.plan.converged = true;
    out.plan.rounds = 0;
    return out;
}

AllocationPlan brute_force_solve(const AllocationProblem& problem, std::size_t max_joint_size) {
    return brute_force_search(problem, max_joint_size).plan;
}

}  // namespace eclip

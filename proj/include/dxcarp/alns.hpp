#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "dxcarp/config.hpp"
#include "dxcarp/error.hpp"
#include "dxcarp/operators.hpp"
#include "dxcarp/rng.hpp"
#include "dxcarp/solution.hpp"

namespace dxcarp {

// Adaptive weights of the destroy-repair pairs.
struct PairStats {
    std::vector<double> weight = std::vector<double>(kPairCount, 1.0);
    std::vector<double> score = std::vector<double>(kPairCount, 0.0);
    std::vector<int> uses = std::vector<int>(kPairCount, 0);
};

// Roulette wheel over the allowed pairs with P_i = rho_i / sum(rho). When
// nothing is allowed the whole wheel is used.
inline std::size_t select_pair(const PairStats& stats, const std::vector<bool>& allowed, Rng& rng,
                               bool* all_vetoed = nullptr) {
    double total = 0.0;
    for (std::size_t i = 0; i < stats.weight.size(); ++i) {
        if (allowed[i]) total += stats.weight[i];
    }
    const bool open_wheel = !(total > 0.0);
    if (all_vetoed) *all_vetoed = open_wheel;
    if (open_wheel) {
        total = 0.0;
        for (double w : stats.weight) total += w;
    }
    const double pick = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < stats.weight.size(); ++i) {
        if (!open_wheel && !allowed[i]) continue;
        acc += stats.weight[i];
        last = i;
        if (pick < acc) return i;
    }
    return last;
}

inline std::size_t select_pair(const PairStats& stats, const TabuList* tabu, std::uint64_t fp, Rng& rng,
                               bool* all_vetoed = nullptr) {
    std::vector<bool> allowed(stats.weight.size(), true);
    if (tabu != nullptr) {
        for (std::size_t i = 0; i < allowed.size(); ++i) allowed[i] = !tabu->check({fp, i});
    }
    return select_pair(stats, allowed, rng, all_vetoed);
}

inline std::vector<double> selection_probabilities(const PairStats& stats, const std::vector<bool>& allowed) {
    double total = 0.0;
    for (std::size_t i = 0; i < stats.weight.size(); ++i) {
        if (allowed[i]) total += stats.weight[i];
    }
    std::vector<double> p(stats.weight.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (allowed[i]) p[i] = stats.weight[i] / total;
    }
    return p;
}

// End of a weight phase: rho <- tau*rho + score/uses for every pair used in the
// phase, clamped to [a_min, a_max]; counters reset.
inline void update_weights(PairStats& stats, double tau, double a_min, double a_max) {
    for (std::size_t i = 0; i < stats.weight.size(); ++i) {
        if (stats.uses[i] > 0) {
            const double w = tau * stats.weight[i] + stats.score[i] / stats.uses[i];
            stats.weight[i] = std::clamp(w, a_min, a_max);
        }
        stats.score[i] = 0.0;
        stats.uses[i] = 0;
    }
}

enum class Outcome : std::uint8_t { NewBest, Improved, Accepted, Rejected };

inline void score_event(PairStats& stats, std::size_t pair, Outcome outcome, const SolverConfig& cfg) {
    stats.uses[pair] += 1;
    switch (outcome) {
    case Outcome::NewBest: stats.score[pair] += cfg.score_best; break;
    case Outcome::Improved: stats.score[pair] += cfg.score_improved; break;
    case Outcome::Accepted: stats.score[pair] += cfg.score_accepted; break;
    case Outcome::Rejected: break;
    }
}

// Simulated-annealing acceptance.
inline bool accept(double f_new, double f_curr, double temperature, Rng& rng) {
    if (f_new < f_curr) return true;
    const double delta = f_new - f_curr;
    if (delta == 0.0) return true;
    if (!(temperature > 0.0)) return false;
    return rng.uniform() < std::exp(-delta / temperature);
}

struct TemperatureSchedule {
    double initial = 0.0;
    double cooling = 1.0;
    double floor = 0.0;

    double next(double t) const { return std::max(floor, t * cooling); }
};

// T_0 accepts a solution worse by worse_accept_fraction * F(S0) with
// probability 1/2.
inline TemperatureSchedule temperature_schedule(const SolverConfig& cfg, double f0) {
    TemperatureSchedule s;
    s.initial = cfg.worse_accept_fraction * std::abs(f0) / std::log(2.0);
    s.cooling = cfg.cooling_rate;
    s.floor = cfg.temperature_floor * s.initial;
    return s;
}

// Random removal of the larger shake fraction, repaired both greedily and by
// regret; the better repair wins.
inline Solution shake(const Solution& curr, double fraction, const MixedNetwork& net, const SolverConfig& cfg, Rng& rng,
                      double accel_ratio = kInfinity) {
    RemovalResult rr = destroy_random(curr, fraction, net, cfg, rng);
    RepairOptions opt;
    opt.accel_ratio = accel_ratio;
    Solution greedy = repair_greedy(rr, net, cfg, opt);
    Solution regret = repair_regret2(std::move(rr), net, cfg, opt);
    return search_objective(regret, cfg) < search_objective(greedy, cfg) ? regret : greedy;
}

// Coin flip between the current solution and the last superseded one.
inline const Solution& fallback(const Solution& curr, const std::optional<Solution>& before, Rng& rng) {
    if (!before) return curr;
    return rng.coin() ? *before : curr;
}

struct TraceRow {
    int iter = 0;
    double f_curr = 0.0;
    double f_best = 0.0;
    std::size_t pair = 0;
    bool accepted = false;
    double temperature = 0.0;
};

struct AlnsResult {
    Solution best;
    int iterations = 0;
    std::vector<TraceRow> trace;
    double wall_s = 0.0;
    double time_to_best_s = 0.0;
    std::optional<double> obj_at_1min;
    std::optional<double> obj_at_5min;
    int all_vetoed_events = 0;
};

struct AlnsOptions {
    bool record_trace = false;
};

// Feasible beats infeasible; otherwise lower search objective wins.
inline bool better_than(const Solution& a, double fa, const Solution& b, double fb, const SolverConfig& cfg) {
    const bool ea = spread_feasible(a, cfg);
    const bool eb = spread_feasible(b, cfg);
    if (ea != eb) return ea;
    return fa < fb;
}

inline Solution apply_pair(const Solution& curr, OperatorPair pair, int iter, const MixedNetwork& net,
                           const SolverConfig& cfg, Rng& rng) {
    const double gamma = cfg.removal_fraction;
    RemovalResult rr;
    switch (pair.destroy) {
    case DestroyOp::Random: rr = destroy_random(curr, gamma, net, cfg, rng); break;
    case DestroyOp::Worst: rr = destroy_worst(curr, gamma, net, cfg); break;
    case DestroyOp::NonAdjacent: rr = destroy_non_adjacent(curr, gamma, net, cfg); break;
    case DestroyOp::FarthestDepot: rr = destroy_farthest_depot(curr, gamma, net, cfg); break;
    case DestroyOp::TimeRelated: rr = destroy_time_related(curr, gamma, net, cfg, rng); break;
    }
    const double accel = cfg.effective_accel_ratio();
    const NoiseParams noise{cfg.noise_scale, static_cast<double>(iter), static_cast<double>(cfg.max_iterations)};
    switch (pair.repair) {
    case RepairOp::Greedy: return repair_greedy(std::move(rr), net, cfg, {accel, nullptr, nullptr});
    case RepairOp::NoiseGreedy: return repair_greedy(std::move(rr), net, cfg, {accel, &noise, &rng});
    case RepairOp::Regret2: return repair_regret2(std::move(rr), net, cfg, {accel, nullptr, nullptr});
    case RepairOp::NoiseRegret: return repair_regret2(std::move(rr), net, cfg, {accel, &noise, &rng});
    case RepairOp::TimeWindow: return repair_time_window(std::move(rr), net, cfg, {accel, nullptr, nullptr});
    }
    return curr;
}

// Destroy-repair search with adaptive pair weights, annealing acceptance and,
// in the improved variant, a tabu list, perturbation and fallback to the
// last superseded solution.
inline AlnsResult run_alns(Solution s0, const MixedNetwork& net, const SolverConfig& cfg, Rng& rng,
                           const AlnsOptions& options = {}) {
    using Clock = std::chrono::steady_clock;
    const auto t_start = Clock::now();
    auto elapsed = [&]() { return std::chrono::duration<double>(Clock::now() - t_start).count(); };

    refresh(s0, net, cfg);
    AlnsResult result;
    if (cfg.max_iterations <= 0 || s0.task_count() == 0) {
        result.best = std::move(s0);
        return result;
    }

    Solution curr = s0;
    Solution best = std::move(s0);
    std::optional<Solution> before;
    double f_curr = search_objective(curr, cfg);
    double f_best = f_curr;

    const TemperatureSchedule sched = temperature_schedule(cfg, cached_objective(curr).total);
    double temperature = sched.initial;
    PairStats stats;
    TabuList tabu(static_cast<std::size_t>(std::max(0, cfg.tabu_capacity)));
    int iter = 1;
    int non_iter = 1;
    int accepted_moves = 0;

    auto replace_curr = [&](Solution next, double f_next) {
        before = std::move(curr);
        curr = std::move(next);
        f_curr = f_next;
        if (++accepted_moves % std::max(1, cfg.recompute_period) == 0) {
            refresh(curr, net, cfg);
            f_curr = search_objective(curr, cfg);
        }
    };
    auto new_best = [&]() {
        best = curr;
        f_best = f_curr;
        non_iter = 1;
        result.time_to_best_s = elapsed();
    };

    do {
        const std::uint64_t fp = fingerprint(curr);
        bool all_vetoed = false;
        const std::size_t pair_id =
            select_pair(stats, cfg.tabu_enabled() ? &tabu : nullptr, fp, rng, &all_vetoed);
        if (all_vetoed) ++result.all_vetoed_events;
        const OperatorPair pair = OperatorPair::from_id(pair_id);

        std::optional<Solution> next;
        try {
            next = apply_pair(curr, pair, iter, net, cfg, rng);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoFeasibleInsertion) throw;
        }
        if (cfg.tabu_enabled()) tabu.record({fp, pair_id});
        temperature = sched.next(temperature);
        ++iter;

        Outcome outcome = Outcome::Rejected;
        if (next) {
            const double f_next = search_objective(*next, cfg);
            if (better_than(*next, f_next, best, f_best, cfg)) {
                replace_curr(std::move(*next), f_next);
                new_best();
                outcome = Outcome::NewBest;
            } else if (f_next < f_curr) {
                replace_curr(std::move(*next), f_next);
                ++non_iter;
                outcome = Outcome::Improved;
            } else if (accept(f_next, f_curr, temperature, rng)) {
                replace_curr(std::move(*next), f_next);
                ++non_iter;
                outcome = Outcome::Accepted;
            } else {
                ++non_iter;
            }
        } else {
            ++non_iter;
        }
        score_event(stats, pair_id, outcome, cfg);

        if (non_iter > cfg.stagnation_threshold && (cfg.perturbation_enabled() || cfg.fallback_enabled())) {
            bool fall_back = cfg.fallback_enabled();
            if (cfg.perturbation_enabled() && non_iter % std::max(1, cfg.shake_period) == 0) {
                std::optional<Solution> shaken;
                try {
                    shaken = shake(curr, cfg.shake_fraction, net, cfg, rng, cfg.effective_accel_ratio());
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::NoFeasibleInsertion) throw;
                }
                if (shaken) {
                    const double f_shaken = search_objective(*shaken, cfg);
                    if (better_than(*shaken, f_shaken, best, f_best, cfg)) {
                        replace_curr(std::move(*shaken), f_shaken);
                        new_best();
                        fall_back = false;
                    } else if (f_shaken < f_curr || accept(f_shaken, f_curr, temperature, rng)) {
                        replace_curr(std::move(*shaken), f_shaken);
                        fall_back = false;
                    }
                }
            }
            if (fall_back && before && &fallback(curr, before, rng) != &curr) {
                std::swap(curr, *before);
                f_curr = search_objective(curr, cfg);
            }
        }

        if (iter % std::max(1, cfg.weight_phase) == 0) {
            update_weights(stats, cfg.weight_decay, cfg.weight_min, cfg.weight_max);
        }

        if (options.record_trace) {
            result.trace.push_back({iter - 1, f_curr, f_best, pair_id, outcome != Outcome::Rejected, temperature});
        }
        const double now = elapsed();
        if (!result.obj_at_1min && now >= 60.0) result.obj_at_1min = cached_objective(best).total;
        if (!result.obj_at_5min && now >= 300.0) result.obj_at_5min = cached_objective(best).total;
        if (cfg.time_limit_s > 0.0 && now >= cfg.time_limit_s) break;
    } while (!(non_iter > cfg.max_non_improving || iter > cfg.max_iterations));

    refresh(best, net, cfg);
    result.best = std::move(best);
    result.iterations = iter - 1;
    result.wall_s = elapsed();
    return result;
}

} // namespace dxcarp

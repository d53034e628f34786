#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dxcarp/config.hpp"
#include "dxcarp/construct.hpp"
#include "dxcarp/error.hpp"
#include "dxcarp/network.hpp"
#include "dxcarp/rng.hpp"
#include "dxcarp/solution.hpp"

namespace dxcarp {

enum class DestroyOp : std::uint8_t { Random, Worst, NonAdjacent, FarthestDepot, TimeRelated };
enum class RepairOp : std::uint8_t { Greedy, NoiseGreedy, Regret2, NoiseRegret, TimeWindow };

inline constexpr std::size_t kDestroyCount = 5;
inline constexpr std::size_t kRepairCount = 5;
inline constexpr std::size_t kPairCount = kDestroyCount * kRepairCount;

inline const char* to_string(DestroyOp op) {
    switch (op) {
    case DestroyOp::Random: return "random";
    case DestroyOp::Worst: return "worst";
    case DestroyOp::NonAdjacent: return "non_adjacent";
    case DestroyOp::FarthestDepot: return "farthest_depot";
    case DestroyOp::TimeRelated: return "time_related";
    }
    return "?";
}

inline const char* to_string(RepairOp op) {
    switch (op) {
    case RepairOp::Greedy: return "greedy";
    case RepairOp::NoiseGreedy: return "noise_greedy";
    case RepairOp::Regret2: return "regret2";
    case RepairOp::NoiseRegret: return "noise_regret";
    case RepairOp::TimeWindow: return "time_window";
    }
    return "?";
}

struct OperatorPair {
    DestroyOp destroy = DestroyOp::Random;
    RepairOp repair = RepairOp::Greedy;

    std::size_t id() const { return static_cast<std::size_t>(destroy) * kRepairCount + static_cast<std::size_t>(repair); }
    static OperatorPair from_id(std::size_t id) {
        return {static_cast<DestroyOp>(id / kRepairCount), static_cast<RepairOp>(id % kRepairCount)};
    }
    friend bool operator==(const OperatorPair&, const OperatorPair&) = default;
};

// Pairs that always map the same input to the same output.
inline bool is_deterministic(OperatorPair p) {
    const bool d = p.destroy != DestroyOp::Random;
    const bool r = p.repair == RepairOp::Greedy || p.repair == RepairOp::Regret2 || p.repair == RepairOp::TimeWindow;
    return d && r;
}

struct RemovalResult {
    Solution partial;
    std::vector<ServiceTask> removed;
};

inline std::size_t removal_count(double fraction, std::size_t n_tasks) {
    if (n_tasks == 0) return 0;
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_tasks)));
    return std::min(n_tasks, std::max<std::size_t>(1, k));
}

namespace detail {

struct TaskRef {
    std::size_t route;
    std::size_t pos;
};

inline std::vector<TaskRef> all_tasks(const Solution& sol) {
    std::vector<TaskRef> out;
    for (std::size_t r = 0; r < sol.routes.size(); ++r) {
        for (std::size_t p = 0; p < sol.routes[r].tasks.size(); ++p) out.push_back({r, p});
    }
    return out;
}

// Removes the referenced tasks; returned tasks keep the order of `refs` and
// have their orientation reset.
inline RemovalResult remove_refs(const Solution& sol, const std::vector<TaskRef>& refs, const MixedNetwork& net,
                                 const SolverConfig& cfg) {
    RemovalResult out;
    out.partial = sol;
    std::vector<std::vector<bool>> drop(sol.routes.size());
    for (std::size_t r = 0; r < sol.routes.size(); ++r) drop[r].assign(sol.routes[r].tasks.size(), false);
    for (const TaskRef& ref : refs) {
        drop[ref.route][ref.pos] = true;
        out.removed.push_back({sol.routes[ref.route].tasks[ref.pos].link, Direction::Forward});
    }
    for (std::size_t r = 0; r < sol.routes.size(); ++r) {
        Route& route = out.partial.routes[r];
        bool changed = false;
        std::vector<ServiceTask> kept;
        kept.reserve(route.tasks.size());
        for (std::size_t p = 0; p < route.tasks.size(); ++p) {
            if (drop[r][p]) {
                changed = true;
            } else {
                kept.push_back(route.tasks[p]);
            }
        }
        if (changed) {
            route.tasks = std::move(kept);
            refresh_route(route, out.partial, net, cfg);
        }
    }
    return out;
}

inline double non_adjacent_distance(const Solution& sol, std::size_t r, std::size_t p, const MixedNetwork& net) {
    const Route& route = sol.routes[r];
    const ServiceTask& t = route.tasks[p];
    const NodeId prev = p == 0 ? route.anchor : task_end(net, route.tasks[p - 1]);
    const NodeId next = p + 1 == route.tasks.size() ? route.depot : task_start(net, route.tasks[p + 1]);
    return net.dist(prev, task_start(net, t)) + net.dist(task_end(net, t), next);
}

// Top-k by score (descending), ties by lowest link id.
inline std::vector<TaskRef> top_k(const Solution& sol, std::vector<std::pair<double, TaskRef>> scored, std::size_t k) {
    std::stable_sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return sol.routes[a.second.route].tasks[a.second.pos].link < sol.routes[b.second.route].tasks[b.second.pos].link;
    });
    std::vector<TaskRef> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Destroy operators

inline RemovalResult destroy_random(const Solution& sol, double fraction, const MixedNetwork& net,
                                    const SolverConfig& cfg, Rng& rng) {
    const auto refs = detail::all_tasks(sol);
    const std::size_t k = removal_count(fraction, refs.size());
    std::vector<detail::TaskRef> chosen;
    for (std::size_t i : rng.sample_indices(refs.size(), k)) chosen.push_back(refs[i]);
    return detail::remove_refs(sol, chosen, net, cfg);
}

// Removes, one at a time, the task whose deletion lowers the objective most.
inline RemovalResult destroy_worst(const Solution& sol, double fraction, const MixedNetwork& net,
                                   const SolverConfig& cfg) {
    RemovalResult out;
    out.partial = sol;
    const std::size_t k = removal_count(fraction, sol.task_count());
    for (std::size_t step = 0; step < k; ++step) {
        double best_gain = -kInfinity;
        detail::TaskRef best{0, 0};
        LinkId best_link = std::numeric_limits<LinkId>::max();
        for (const auto& ref : detail::all_tasks(out.partial)) {
            const double gain = -evaluate_removal(out.partial, ref.route, ref.pos, net, cfg).cost_delta;
            const LinkId link = out.partial.routes[ref.route].tasks[ref.pos].link;
            if (gain > best_gain || (gain == best_gain && link < best_link)) {
                best_gain = gain;
                best = ref;
                best_link = link;
            }
        }
        remove_task(out.partial, best.route, best.pos, net, cfg);
        out.removed.push_back({best_link, Direction::Forward});
    }
    return out;
}

// Non-adjacent distance: deadhead from the predecessor plus deadhead to the
// successor, anchors and depots included.
inline RemovalResult destroy_non_adjacent(const Solution& sol, double fraction, const MixedNetwork& net,
                                          const SolverConfig& cfg) {
    std::vector<std::pair<double, detail::TaskRef>> scored;
    for (const auto& ref : detail::all_tasks(sol)) {
        scored.push_back({detail::non_adjacent_distance(sol, ref.route, ref.pos, net), ref});
    }
    const std::size_t k = removal_count(fraction, scored.size());
    return detail::remove_refs(sol, detail::top_k(sol, std::move(scored), k), net, cfg);
}

inline RemovalResult destroy_farthest_depot(const Solution& sol, double fraction, const MixedNetwork& net,
                                            const SolverConfig& cfg) {
    std::vector<std::pair<double, detail::TaskRef>> scored;
    for (const auto& ref : detail::all_tasks(sol)) {
        const Route& r = sol.routes[ref.route];
        scored.push_back({link_node_distance(net, r.tasks[ref.pos].link, r.depot), ref});
    }
    const std::size_t k = removal_count(fraction, scored.size());
    return detail::remove_refs(sol, detail::top_k(sol, std::move(scored), k), net, cfg);
}

// Late tasks first (largest penalty first), topped up with random tasks. In the
// fixed stage nothing is late, so this is random removal.
inline RemovalResult destroy_time_related(const Solution& sol, double fraction, const MixedNetwork& net,
                                          const SolverConfig& cfg, Rng& rng) {
    if (sol.stage == Stage::Fixed) return destroy_random(sol, fraction, net, cfg, rng);
    const auto refs = detail::all_tasks(sol);
    const std::size_t k = removal_count(fraction, refs.size());
    std::vector<std::pair<double, detail::TaskRef>> late;
    std::vector<detail::TaskRef> on_time;
    for (const auto& ref : refs) {
        const Route& r = sol.routes[ref.route];
        const TimeWindow* w = sol.window(r.tasks[ref.pos].link);
        const double pen = w ? lateness_penalty(r.start_times[ref.pos], *w, cfg) : 0.0;
        if (pen > 0.0) {
            late.push_back({pen, ref});
        } else {
            on_time.push_back(ref);
        }
    }
    std::vector<detail::TaskRef> chosen = detail::top_k(sol, std::move(late), k);
    if (chosen.size() < k) {
        for (std::size_t i : rng.sample_indices(on_time.size(), k - chosen.size())) chosen.push_back(on_time[i]);
    }
    return detail::remove_refs(sol, chosen, net, cfg);
}

// ---------------------------------------------------------------------------
// Insertion machinery

// mu * (1 - iter/all_iter) * z * d_max
inline double noise_value(double mu, double iter, double all_iter, double z, double d_max) {
    const double phi = all_iter > 0.0 ? 1.0 - iter / all_iter : 0.0;
    return mu * phi * z * d_max;
}

inline double noise_term(double mu, double iter, double all_iter, double d_max, Rng& rng) {
    return noise_value(mu, iter, all_iter, rng.uniform_closed(), d_max);
}

// Largest non-adjacent distance present in a solution.
inline double max_non_adjacent_distance(const Solution& sol, const MixedNetwork& net) {
    double d = 0.0;
    for (const auto& ref : detail::all_tasks(sol)) {
        d = std::max(d, detail::non_adjacent_distance(sol, ref.route, ref.pos, net));
    }
    return d;
}

// Routes worth scanning for a task: those whose reference point (depot, or
// the current position in the re-planning stage) lies within accel_ratio
// times the distance from the task to its closest depot.
inline std::vector<std::size_t> candidate_routes(LinkId link, const Solution& sol, const MixedNetwork& net,
                                                 double accel_ratio) {
    std::vector<std::size_t> all(sol.routes.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (!std::isfinite(accel_ratio) || sol.routes.size() <= 1) return all;

    auto ref_point = [&](const Route& r) { return sol.stage == Stage::Replan ? r.anchor : r.depot; };
    double closest = kInfinity;
    if (sol.stage == Stage::Fixed) {
        for (NodeId d : net.depots()) closest = std::min(closest, link_node_distance(net, link, d));
    } else {
        for (const Route& r : sol.routes) closest = std::min(closest, link_node_distance(net, link, ref_point(r)));
    }
    std::vector<double> dist(sol.routes.size());
    double closest_route = kInfinity;
    for (std::size_t i = 0; i < sol.routes.size(); ++i) {
        dist[i] = link_node_distance(net, link, ref_point(sol.routes[i]));
        closest_route = std::min(closest_route, dist[i]);
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < sol.routes.size(); ++i) {
        if (dist[i] <= accel_ratio * closest + 1e-9) out.push_back(i);
    }
    if (out.empty()) { // no route departs from the closest depot
        for (std::size_t i = 0; i < sol.routes.size(); ++i) {
            if (dist[i] <= accel_ratio * closest_route + 1e-9) out.push_back(i);
        }
    }
    return out;
}

struct NoiseParams {
    double mu = 0.0;
    double iter = 0.0;
    double all_iter = 1.0;
};

struct RepairOptions {
    double accel_ratio = std::numeric_limits<double>::infinity();
    const NoiseParams* noise = nullptr; // null: exact costs
    Rng* rng = nullptr;                 // required when noise is set
};

namespace detail {

// Working-time extremes, for the spread component of the insertion cost.
class SpreadTracker {
public:
    explicit SpreadTracker(const Solution& sol) {
        for (std::size_t i = 0; i < sol.routes.size(); ++i) {
            const double w = sol.routes[i].work_time;
            works_.push_back(w);
            if (w > max1_) {
                max2_ = max1_;
                max1_ = w;
                max_idx_ = i;
            } else if (w > max2_) {
                max2_ = w;
            }
            if (w < min1_) {
                min2_ = min1_;
                min1_ = w;
                min_idx_ = i;
            } else if (w < min2_) {
                min2_ = w;
            }
        }
    }

    double spread_after(std::size_t route, double work_delta) const {
        if (works_.size() <= 1) return 0.0;
        const double w = works_[route] + work_delta;
        const double hi = std::max(route == max_idx_ ? max2_ : max1_, w);
        const double lo = std::min(route == min_idx_ ? min2_ : min1_, w);
        return hi - lo;
    }

    double spread() const { return works_.size() <= 1 ? 0.0 : max1_ - min1_; }

private:
    std::vector<double> works_;
    double max1_ = -kInfinity, max2_ = -kInfinity, min1_ = kInfinity, min2_ = kInfinity;
    std::size_t max_idx_ = 0, min_idx_ = 0;
};

struct Candidate {
    double cost = kInfinity;
    std::size_t route = 0;
    std::size_t pos = 0;
    ServiceTask task{};
    double start = 0.0; // service start time of the inserted task
};

// Calls visit(candidate) for every capacity-feasible insertion of `link` into
// the listed routes. Cost = objective delta + spread charge.
template <typename Visit>
void scan_insertions(const Solution& sol, LinkId link, const std::vector<std::size_t>& routes,
                     const SpreadTracker& spread, const MixedNetwork& net, const SolverConfig& cfg, Visit&& visit) {
    const double base_excess = std::max(0.0, spread.spread() - cfg.max_work_spread);
    const double vr = cfg.service_speed();
    const double vn = cfg.deadhead_speed();
    const auto dirs = allowed_directions(net, link);
    for (std::size_t r : routes) {
        const Route& route = sol.routes[r];
        if (route.load + net.service_demand(link) > route.capacity + kFeasibilityTolerance) continue;
        for (std::size_t p = 0; p <= route.tasks.size(); ++p) {
            for (Direction d : dirs) {
                const ServiceTask t{link, d};
                const InsertionEval ev = evaluate_insertion(sol, r, p, t, net, cfg);
                if (!ev.capacity_ok) continue;
                const double excess = std::max(0.0, spread.spread_after(r, ev.work_delta) - cfg.max_work_spread);
                Candidate c;
                c.cost = ev.cost_delta + cfg.balance_weight * (excess - base_excess);
                c.route = r;
                c.pos = p;
                c.task = t;
                const NodeId prev = p == 0 ? route.anchor : task_end(net, route.tasks[p - 1]);
                const double ready =
                    p == 0 ? route.start_time : route.start_times[p - 1] + net.link(route.tasks[p - 1].link).length / vr;
                c.start = ready + net.dist(prev, task_start(net, t)) / vn;
                visit(c);
            }
        }
    }
}

inline void place(Solution& sol, const Candidate& c, const MixedNetwork& net, const SolverConfig& cfg) {
    insert_task(sol, c.route, c.pos, c.task, net, cfg);
}

inline std::vector<LinkId> sorted_links(const std::vector<ServiceTask>& removed) {
    std::vector<LinkId> out;
    for (const ServiceTask& t : removed) out.push_back(t.link);
    std::sort(out.begin(), out.end());
    return out;
}

inline double perturbed(double cost, const RepairOptions& opt, double d_max) {
    if (opt.noise == nullptr) return cost;
    return cost + noise_term(opt.noise->mu, opt.noise->iter, opt.noise->all_iter, d_max, *opt.rng);
}

// Candidate routes per link, widened to every route when the filtered set
// admits no feasible insertion.
class RouteFilter {
public:
    RouteFilter(const Solution& sol, const std::vector<LinkId>& links, const MixedNetwork& net, double ratio) {
        all_.resize(sol.routes.size());
        for (std::size_t i = 0; i < all_.size(); ++i) all_[i] = i;
        for (LinkId l : links) filtered_.emplace_back(l, candidate_routes(l, sol, net, ratio));
    }
    const std::vector<std::size_t>& filtered(LinkId l) const {
        for (const auto& [link, routes] : filtered_) {
            if (link == l) return routes;
        }
        return all_;
    }
    const std::vector<std::size_t>& all() const { return all_; }

private:
    std::vector<std::size_t> all_;
    std::vector<std::pair<LinkId, std::vector<std::size_t>>> filtered_;
};

template <typename Visit>
void scan_with_fallback(const Solution& sol, LinkId link, const RouteFilter& filter, const SpreadTracker& spread,
                        const MixedNetwork& net, const SolverConfig& cfg, Visit&& visit) {
    bool any = false;
    auto wrapped = [&](const Candidate& c) {
        any = true;
        visit(c);
    };
    const std::vector<std::size_t>& near = filter.filtered(link);
    scan_insertions(sol, link, near, spread, net, cfg, wrapped);
    if (!any && near.size() != filter.all().size()) {
        std::vector<std::size_t> rest;
        for (std::size_t r : filter.all()) {
            if (std::find(near.begin(), near.end(), r) == near.end()) rest.push_back(r);
        }
        scan_insertions(sol, link, rest, spread, net, cfg, wrapped);
    }
    if (!any) {
        throw Error(ErrorCode::NoFeasibleInsertion,
                    "link " + std::to_string(net.link(link).external_id) + " fits no route");
    }
}

inline void finish_fixed(Solution& sol, const MixedNetwork& net, const SolverConfig& cfg);

} // namespace detail

// Re-anchors every fixed-stage route at the depot and rotation with the
// smallest route distance, unless the shorter route widens the working-time
// spread by more than it saves. Never increases the search objective.
inline Solution reoptimize_depots(Solution sol, const MixedNetwork& net, const SolverConfig& cfg) {
    if (sol.stage != Stage::Fixed) return sol;
    for (Route& r : sol.routes) {
        if (r.tasks.empty()) continue;
        refresh_route(r, sol, net, cfg);
        const double before = search_objective(sol, cfg);
        const Route kept = r;
        const double current = route_distance(r, net);
        double best = current;
        NodeId best_depot = r.depot;
        std::size_t best_k = 0;
        for (NodeId d : net.depots()) {
            const auto [k, dh] = detail::best_rotation(r.tasks, d, net);
            double svc = 0.0;
            for (const ServiceTask& t : r.tasks) svc += net.link(t.link).length;
            if (svc + dh < best - 1e-9) {
                best = svc + dh;
                best_depot = d;
                best_k = k;
            }
        }
        if (best < current) {
            std::rotate(r.tasks.begin(), r.tasks.begin() + static_cast<std::ptrdiff_t>(best_k), r.tasks.end());
            r.depot = r.anchor = best_depot;
            refresh_route(r, sol, net, cfg);
            if (search_objective(sol, cfg) > before) r = kept;
        }
    }
    return sol;
}

namespace detail {
inline void finish_fixed(Solution& sol, const MixedNetwork& net, const SolverConfig& cfg) {
    if (sol.stage == Stage::Fixed) sol = reoptimize_depots(std::move(sol), net, cfg);
}
} // namespace detail

// Repeatedly inserts the globally cheapest (task, route, position,
// orientation).
inline Solution repair_greedy(RemovalResult rr, const MixedNetwork& net, const SolverConfig& cfg,
                              const RepairOptions& opt = {}) {
    Solution sol = std::move(rr.partial);
    std::vector<LinkId> pending = detail::sorted_links(rr.removed);
    const detail::RouteFilter filter(sol, pending, net, opt.accel_ratio);
    const double d_max = opt.noise ? max_non_adjacent_distance(sol, net) : 0.0;
    while (!pending.empty()) {
        const detail::SpreadTracker spread(sol);
        detail::Candidate best;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < pending.size(); ++i) {
            detail::scan_with_fallback(sol, pending[i], filter, spread, net, cfg, [&](detail::Candidate c) {
                c.cost = detail::perturbed(c.cost, opt, d_max);
                if (c.cost < best.cost) {
                    best = c;
                    best_i = i;
                }
            });
        }
        detail::place(sol, best, net, cfg);
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best_i));
    }
    detail::finish_fixed(sol, net, cfg);
    return sol;
}

inline Solution repair_noise_greedy(RemovalResult rr, const MixedNetwork& net, const SolverConfig& cfg,
                                    double iter, double all_iter, Rng& rng, double accel_ratio = kInfinity) {
    const NoiseParams noise{cfg.noise_scale, iter, all_iter};
    return repair_greedy(std::move(rr), net, cfg, RepairOptions{accel_ratio, &noise, &rng});
}

// Per-task best and second-best insertion over distinct (route, position)
// slots; the task with the largest gap goes first, at its best slot. A task
// with a single feasible slot has infinite regret.
struct RegretChoice {
    std::size_t index = 0;
    double regret = -kInfinity;
    detail::Candidate best;
};

inline RegretChoice regret_round(const Solution& sol, const std::vector<LinkId>& pending,
                                 const detail::RouteFilter& filter, const MixedNetwork& net, const SolverConfig& cfg,
                                 const RepairOptions& opt, double d_max) {
    const detail::SpreadTracker spread(sol);
    RegretChoice choice;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        detail::Candidate best;
        double second = kInfinity;
        // orientations of one slot collapse to the slot's cheapest
        std::size_t slot_route = SIZE_MAX, slot_pos = SIZE_MAX;
        detail::Candidate slot_best;
        auto close_slot = [&]() {
            if (slot_route == SIZE_MAX) return;
            if (slot_best.cost < best.cost) {
                second = best.cost;
                best = slot_best;
            } else if (slot_best.cost < second) {
                second = slot_best.cost;
            }
        };
        detail::scan_with_fallback(sol, pending[i], filter, spread, net, cfg, [&](detail::Candidate c) {
            c.cost = detail::perturbed(c.cost, opt, d_max);
            if (c.route != slot_route || c.pos != slot_pos) {
                close_slot();
                slot_route = c.route;
                slot_pos = c.pos;
                slot_best = c;
            } else if (c.cost < slot_best.cost) {
                slot_best = c;
            }
        });
        close_slot();
        const double regret = second == kInfinity ? kInfinity : second - best.cost;
        if (regret > choice.regret) {
            choice.regret = regret;
            choice.index = i;
            choice.best = best;
        }
    }
    return choice;
}

inline Solution repair_regret2(RemovalResult rr, const MixedNetwork& net, const SolverConfig& cfg,
                               const RepairOptions& opt = {}) {
    Solution sol = std::move(rr.partial);
    std::vector<LinkId> pending = detail::sorted_links(rr.removed);
    const detail::RouteFilter filter(sol, pending, net, opt.accel_ratio);
    const double d_max = opt.noise ? max_non_adjacent_distance(sol, net) : 0.0;
    while (!pending.empty()) {
        const RegretChoice c = regret_round(sol, pending, filter, net, cfg, opt, d_max);
        detail::place(sol, c.best, net, cfg);
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(c.index));
    }
    detail::finish_fixed(sol, net, cfg);
    return sol;
}

inline Solution repair_noise_regret(RemovalResult rr, const MixedNetwork& net, const SolverConfig& cfg, double iter,
                                    double all_iter, Rng& rng, double accel_ratio = kInfinity) {
    const NoiseParams noise{cfg.noise_scale, iter, all_iter};
    return repair_regret2(std::move(rr), net, cfg, RepairOptions{accel_ratio, &noise, &rng});
}

// Windowed tasks (earliest deadline first) go to the cheapest slot whose start
// time lies inside the window, or the cheapest slot overall when none does.
// The rest are inserted greedily.
inline Solution repair_time_window(RemovalResult rr, const MixedNetwork& net, const SolverConfig& cfg,
                                   const RepairOptions& opt = {}) {
    Solution sol = std::move(rr.partial);
    std::vector<LinkId> windowed;
    std::vector<ServiceTask> rest;
    for (const ServiceTask& t : rr.removed) {
        if (sol.window(t.link) != nullptr) {
            windowed.push_back(t.link);
        } else {
            rest.push_back(t);
        }
    }
    std::sort(windowed.begin(), windowed.end(), [&](LinkId a, LinkId b) {
        const double ca = sol.window(a)->close;
        const double cb = sol.window(b)->close;
        if (ca != cb) return ca < cb;
        return a < b;
    });
    const detail::RouteFilter filter(sol, windowed, net, opt.accel_ratio);
    for (LinkId link : windowed) {
        const TimeWindow& w = *sol.window(link);
        const detail::SpreadTracker spread(sol);
        detail::Candidate in_window;
        detail::Candidate any;
        detail::scan_with_fallback(sol, link, filter, spread, net, cfg, [&](const detail::Candidate& c) {
            const bool inside = c.start >= w.open - kFeasibilityTolerance && c.start <= w.close + kFeasibilityTolerance;
            if (inside && c.cost < in_window.cost) in_window = c;
            if (c.cost < any.cost) any = c;
        });
        detail::place(sol, in_window.cost < kInfinity ? in_window : any, net, cfg);
    }
    RemovalResult remaining{std::move(sol), std::move(rest)};
    return repair_greedy(std::move(remaining), net, cfg, opt);
}

// ---------------------------------------------------------------------------
// Tabu list

struct TabuKey {
    std::uint64_t fingerprint = 0;
    std::size_t pair = 0;

    friend bool operator==(const TabuKey&, const TabuKey&) = default;
};

struct TabuKeyHash {
    std::size_t operator()(const TabuKey& k) const noexcept {
        return static_cast<std::size_t>(k.fingerprint ^ (static_cast<std::uint64_t>(k.pair) * 0x9e3779b97f4a7c15ULL));
    }
};

// Bounded FIFO memory of (solution, deterministic pair) applications.
class TabuList {
public:
    explicit TabuList(std::size_t capacity = 5000) : capacity_(capacity) {}

    bool check(const TabuKey& key) const { return set_.count(key) != 0; }

    void record(const TabuKey& key) {
        if (!is_deterministic(OperatorPair::from_id(key.pair)) || capacity_ == 0) return;
        if (!set_.insert(key).second) return;
        fifo_.push_back(key);
        if (fifo_.size() > capacity_) {
            set_.erase(fifo_.front());
            fifo_.pop_front();
        }
    }

    std::size_t size() const { return fifo_.size(); }

private:
    std::size_t capacity_;
    std::deque<TabuKey> fifo_;
    std::unordered_set<TabuKey, TabuKeyHash> set_;
};

inline bool tabu_check(const TabuList& list, const TabuKey& key) { return list.check(key); }
inline void tabu_record(TabuList& list, const TabuKey& key) { list.record(key); }

} // namespace dxcarp

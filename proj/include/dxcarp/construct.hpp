#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "dxcarp/config.hpp"
#include "dxcarp/error.hpp"
#include "dxcarp/network.hpp"
#include "dxcarp/rng.hpp"
#include "dxcarp/solution.hpp"

namespace dxcarp {

// Number of vehicles m with (m-1)Q < total <= mQ.
inline std::size_t fleet_size(double total_demand, double capacity) {
    if (!(total_demand > 0.0) || !(capacity > 0.0)) {
        throw std::invalid_argument("fleet_size needs positive demand and capacity");
    }
    const double ratio = total_demand / capacity;
    auto m = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
    return std::max<std::size_t>(m, 1);
}

// Gap between two links: the shortest end-to-start deadhead over every legal
// pair of orientations, in either order.
inline double link_distance(const MixedNetwork& net, LinkId a, LinkId b) {
    double best = kInfinity;
    for (Direction da : allowed_directions(net, a)) {
        const ServiceTask ta{a, da};
        for (Direction db : allowed_directions(net, b)) {
            const ServiceTask tb{b, db};
            best = std::min(best, net.dist(task_end(net, ta), task_start(net, tb)));
            best = std::min(best, net.dist(task_end(net, tb), task_start(net, ta)));
        }
    }
    return best;
}

// Closeness of a link to a node: reaching it from the node or returning to
// the node after serving it, whichever is shorter.
inline double link_node_distance(const MixedNetwork& net, LinkId link, NodeId node) {
    double best = kInfinity;
    for (Direction d : allowed_directions(net, link)) {
        const ServiceTask t{link, d};
        best = std::min(best, net.dist(node, task_start(net, t)));
        best = std::min(best, net.dist(task_end(net, t), node));
    }
    return best;
}

inline double route_distance(const Route& r, const MixedNetwork& net) {
    double total = 0.0;
    NodeId at = r.anchor;
    for (const ServiceTask& t : r.tasks) {
        total += net.dist(at, task_start(net, t)) + net.link(t.link).length;
        at = task_end(net, t);
    }
    return total + net.dist(at, r.depot);
}

namespace detail {

// Cheapest cyclic rotation of a fixed-stage route when it starts and ends at
// depot. Returns the rotation offset and the resulting deadhead.
inline std::pair<std::size_t, double> best_rotation(const std::vector<ServiceTask>& tasks, NodeId depot,
                                                    const MixedNetwork& net) {
    const std::size_t n = tasks.size();
    if (n == 0) return {0, 0.0};
    std::vector<double> gap(n); // gap[k]: end of task k-1 to start of task k (cyclic)
    double cyclic = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const ServiceTask& before = tasks[(k + n - 1) % n];
        gap[k] = net.dist(task_end(net, before), task_start(net, tasks[k]));
        cyclic += gap[k];
    }
    std::size_t best_k = 0;
    double best = kInfinity;
    for (std::size_t k = 0; k < n; ++k) {
        const ServiceTask& before = tasks[(k + n - 1) % n];
        const double cost = cyclic - gap[k] + net.dist(task_end(net, before), depot) +
                            net.dist(depot, task_start(net, tasks[k]));
        if (cost < best - 1e-9) {
            best = cost;
            best_k = k;
        }
    }
    return {best_k, best};
}

} // namespace detail

// Picks the depot with the smallest summed distance to the route's links
// (lowest id on ties) and rotates the task cycle so that leaving and
// returning to it is cheapest.
inline std::pair<NodeId, Route> assign_depot(const Route& route, const MixedNetwork& net) {
    NodeId best_depot = net.depots().front();
    double best_sum = kInfinity;
    for (NodeId p : net.depots()) {
        double sum = 0.0;
        for (const ServiceTask& t : route.tasks) sum += link_node_distance(net, t.link, p);
        if (sum < best_sum - 1e-9 || (std::abs(sum - best_sum) <= 1e-9 && p < best_depot)) {
            best_sum = sum;
            best_depot = p;
        }
    }
    Route out = route;
    out.depot = best_depot;
    out.anchor = best_depot;
    const auto [k, cost] = detail::best_rotation(route.tasks, best_depot, net);
    (void)cost;
    std::rotate(out.tasks.begin(), out.tasks.begin() + static_cast<std::ptrdiff_t>(k), out.tasks.end());
    return {best_depot, std::move(out)};
}

namespace detail {

struct Placement {
    std::size_t pos = 0;
    ServiceTask task;
    double work_delta = 0.0;
};

// Cheapest position and orientation of a link in a route, if the tank allows.
inline std::optional<Placement> cheapest_placement(const Solution& sol, std::size_t route, LinkId link,
                                                   const MixedNetwork& net, const SolverConfig& cfg) {
    std::optional<Placement> best;
    double best_cost = kInfinity;
    for (Direction d : allowed_directions(net, link)) {
        const ServiceTask t{link, d};
        for (std::size_t p = 0; p <= sol.routes[route].tasks.size(); ++p) {
            const InsertionEval ev = evaluate_insertion(sol, route, p, t, net, cfg);
            if (!ev.capacity_ok || ev.cost_delta >= best_cost - 1e-12) continue;
            best_cost = ev.cost_delta;
            best = Placement{p, t, ev.work_delta};
        }
    }
    return best;
}

inline bool evens_out(const Solution& sol, double spread, double sum_sq) {
    double lo = kInfinity;
    double hi = -kInfinity;
    double sq = 0.0;
    for (const Route& r : sol.routes) {
        lo = std::min(lo, r.work_time);
        hi = std::max(hi, r.work_time);
        sq += r.work_time * r.work_time;
    }
    return hi - lo < spread - 1e-9 || (hi - lo <= spread + 1e-9 && sq < sum_sq - 1e-9);
}

inline bool try_balance_swap(Solution& sol, std::size_t longest, const std::vector<std::size_t>& cand,
                             const std::vector<std::size_t>& order, double spread, double sum_sq,
                             const MixedNetwork& net, const SolverConfig& cfg) {
    for (std::size_t pa : cand) {
        for (std::size_t target : order) {
            if (target == longest) continue;
            for (std::size_t pb = 0; pb < sol.routes[target].tasks.size(); ++pb) {
                Solution tmp = sol;
                const ServiceTask a = remove_task(tmp, longest, pa, net, cfg);
                const ServiceTask b = remove_task(tmp, target, pb, net, cfg);
                const std::optional<Placement> into_long = cheapest_placement(tmp, longest, b.link, net, cfg);
                if (!into_long) continue;
                insert_task(tmp, longest, into_long->pos, into_long->task, net, cfg);
                const std::optional<Placement> into_target = cheapest_placement(tmp, target, a.link, net, cfg);
                if (!into_target) continue;
                insert_task(tmp, target, into_target->pos, into_target->task, net, cfg);
                if (evens_out(tmp, spread, sum_sq)) {
                    sol = std::move(tmp);
                    return true;
                }
            }
        }
    }
    return false;
}

} // namespace detail

// Moves tasks from the longest-working route to the shortest until the spread
// is within T_dif. The farthest task from the long route's depot is tried first
// against the shortest route; other (task, target) pairs are tried only when
// that move does not fit the tank or would leave the working times less even.
// A move must shrink the spread, or keep it and shrink the sum of squared
// working times, so the loop cannot cycle.
inline Solution balance_workload(Solution sol, const MixedNetwork& net, const SolverConfig& cfg) {
    refresh(sol, net, cfg);
    if (sol.routes.size() < 2) return sol;
    const std::size_t n_tasks = sol.task_count();
    const std::size_t cap_iters =
        cfg.max_balance_iters > 0 ? static_cast<std::size_t>(cfg.max_balance_iters) : 10 * std::max<std::size_t>(n_tasks, 1);

    for (std::size_t iter = 0;; ++iter) {
        const double spread = work_spread(sol);
        if (spread <= cfg.max_work_spread + kFeasibilityTolerance) return sol;
        double sum_sq = 0.0;
        for (const Route& r : sol.routes) sum_sq += r.work_time * r.work_time;
        if (iter >= cap_iters) {
            throw Error(ErrorCode::InfeasibleBalance, "spread still " + std::to_string(spread) + " min after " +
                                                          std::to_string(iter) + " moves");
        }

        std::vector<std::size_t> order(sol.routes.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sol.routes[a].work_time < sol.routes[b].work_time;
        });
        std::size_t longest = order.back();
        for (std::size_t i : order) {
            if (sol.routes[i].work_time == sol.routes[longest].work_time && i < longest) longest = i;
        }
        const Route& src = sol.routes[longest];

        std::vector<std::size_t> cand(src.tasks.size());
        std::iota(cand.begin(), cand.end(), 0);
        std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            const double da = link_node_distance(net, src.tasks[a].link, src.depot);
            const double db = link_node_distance(net, src.tasks[b].link, src.depot);
            if (da != db) return da > db;
            return src.tasks[a].link < src.tasks[b].link;
        });

        bool moved = false;
        for (std::size_t pos : cand) {
            const RemovalEval rem = evaluate_removal(sol, longest, pos, net, cfg);
            const ServiceTask base = src.tasks[pos];
            for (std::size_t target : order) {
                if (target == longest) continue;
                // cheapest legal insertion into target
                double best_cost = kInfinity;
                std::size_t best_pos = 0;
                ServiceTask best_task = base;
                double best_work = 0.0;
                for (Direction d : allowed_directions(net, base.link)) {
                    const ServiceTask t{base.link, d};
                    for (std::size_t p = 0; p <= sol.routes[target].tasks.size(); ++p) {
                        const InsertionEval ev = evaluate_insertion(sol, target, p, t, net, cfg);
                        if (!ev.capacity_ok) continue;
                        if (ev.cost_delta < best_cost - 1e-12) {
                            best_cost = ev.cost_delta;
                            best_pos = p;
                            best_task = t;
                            best_work = ev.work_delta;
                        }
                    }
                }
                if (best_cost == kInfinity) continue;
                double lo = kInfinity;
                double hi = -kInfinity;
                double sq = 0.0;
                for (std::size_t i = 0; i < sol.routes.size(); ++i) {
                    double w = sol.routes[i].work_time;
                    if (i == longest) w += rem.work_delta;
                    if (i == target) w += best_work;
                    lo = std::min(lo, w);
                    hi = std::max(hi, w);
                    sq += w * w;
                }
                const bool narrower = hi - lo < spread - 1e-9;
                const bool evener = hi - lo <= spread + 1e-9 && sq < sum_sq - 1e-9;
                if (narrower || evener) {
                    remove_task(sol, longest, pos, net, cfg);
                    insert_task(sol, target, best_pos, best_task, net, cfg);
                    moved = true;
                    break;
                }
            }
            if (moved) break;
        }
        // Tight tanks can block every single move; exchanging a task of the
        // longest route with one of another route keeps loads nearly equal.
        if (!moved) moved = detail::try_balance_swap(sol, longest, cand, order, spread, sum_sq, net, cfg);
        if (!moved) {
            throw Error(ErrorCode::InfeasibleBalance,
                        "no task move evens out the working-time spread of " + std::to_string(spread) + " min");
        }
    }
}

// Route seeds: the first uniformly at random, each further one the link with
// the largest summed distance to the seeds already chosen (lowest id on ties).
inline std::vector<LinkId> select_seeds(const MixedNetwork& net, std::vector<LinkId> pool, std::size_t m, Rng& rng) {
    std::sort(pool.begin(), pool.end());
    std::vector<LinkId> seeds;
    if (pool.empty() || m == 0) return seeds;
    const std::size_t first = rng.below(pool.size());
    seeds.push_back(pool[first]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(first));
    while (seeds.size() < m && !pool.empty()) {
        std::size_t best_idx = 0;
        double best = -kInfinity;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            double sum = 0.0;
            for (LinkId s : seeds) sum += link_distance(net, pool[i], s);
            if (sum > best) {
                best = sum;
                best_idx = i;
            }
        }
        seeds.push_back(pool[best_idx]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best_idx));
    }
    return seeds;
}

// Seeds m routes with mutually distant links, then grows them in turn with
// the nearest unassigned link and anchors each at its closest depot. Working
// times are left as they fall.
inline Solution construct_routes(const MixedNetwork& net, const std::vector<LinkId>& demands, const SolverConfig& cfg,
                                 Rng& rng) {
    if (demands.empty()) throw Error(ErrorCode::NoDemand, "no demand links to plan");
    std::vector<LinkId> pool = demands;
    std::sort(pool.begin(), pool.end());
    double total = 0.0;
    for (LinkId id : pool) {
        const double d = net.service_demand(id);
        if (d > cfg.capacity + kFeasibilityTolerance) {
            throw Error(ErrorCode::Infeasible, "link " + std::to_string(net.link(id).external_id) +
                                                   " alone exceeds the tank capacity");
        }
        total += d;
    }
    const std::size_t m = fleet_size(total, cfg.capacity);

    std::vector<std::vector<ServiceTask>> seqs(m);
    std::vector<double> loads(m, 0.0);
    std::vector<NodeId> now(m);
    const std::vector<LinkId> seeds = select_seeds(net, pool, m, rng);

    for (std::size_t r = 0; r < m; ++r) {
        const LinkId id = seeds[r];
        pool.erase(std::find(pool.begin(), pool.end(), id));
        seqs[r].push_back({id, Direction::Forward});
        loads[r] = net.service_demand(id);
        now[r] = task_end(net, seqs[r].back());
    }

    // nearest[i] over the pool from node `from`, optionally only links that fit
    auto nearest = [&](NodeId from, double room) -> std::pair<std::size_t, ServiceTask> {
        std::size_t best_idx = pool.size();
        ServiceTask best_task{};
        double best = kInfinity;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (net.service_demand(pool[i]) > room + kFeasibilityTolerance) continue;
            for (Direction d : allowed_directions(net, pool[i])) {
                const ServiceTask t{pool[i], d};
                const double dd = net.dist(from, task_start(net, t));
                if (dd < best) {
                    best = dd;
                    best_idx = i;
                    best_task = t;
                }
            }
        }
        return {best_idx, best_task};
    };

    while (!pool.empty()) {
        bool progress = false;
        for (std::size_t f = 0; f < m && !pool.empty(); ++f) {
            auto [idx, task] = nearest(now[f], kInfinity);
            if (loads[f] + net.service_demand(task.link) > cfg.capacity + kFeasibilityTolerance) continue;
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
            seqs[f].push_back(task);
            loads[f] += net.service_demand(task.link);
            now[f] = task_end(net, task);
            progress = true;
        }
        if (progress) continue;
        // Every route's nearest link overflows it: fall back to the nearest
        // link that still fits.
        for (std::size_t f = 0; f < m && !pool.empty(); ++f) {
            auto [idx, task] = nearest(now[f], cfg.capacity - loads[f]);
            if (idx == pool.size()) continue;
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
            seqs[f].push_back(task);
            loads[f] += net.service_demand(task.link);
            now[f] = task_end(net, task);
            progress = true;
        }
        if (!progress) throw Error(ErrorCode::Infeasible, "remaining links do not fit any tank");
    }

    Solution sol;
    sol.stage = Stage::Fixed;
    for (std::size_t f = 0; f < m; ++f) {
        Route r;
        r.vehicle = f;
        r.capacity = cfg.capacity;
        r.tasks = std::move(seqs[f]);
        r.depot = r.anchor = net.depots().front();
        sol.routes.push_back(assign_depot(r, net).second);
    }
    refresh(sol, net, cfg);
    return sol;
}

// First plan: constructed routes with working times balanced to T_dif.
inline Solution initial_solution(const MixedNetwork& net, const std::vector<LinkId>& demands, const SolverConfig& cfg,
                                 Rng& rng) {
    return balance_workload(construct_routes(net, demands, cfg, rng), net, cfg);
}

} // namespace dxcarp

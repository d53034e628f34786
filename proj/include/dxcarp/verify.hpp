#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dxcarp/config.hpp"
#include "dxcarp/error.hpp"
#include "dxcarp/network.hpp"
#include "dxcarp/solution.hpp"

// Exhaustive reference solver and plan auditor. Nothing here calls the
// solver's timing or objective routines; the only shared input is the
// network's distance matrix.

namespace dxcarp {

inline constexpr std::size_t kOracleMaxTasks = 8;

struct OracleVehicle {
    std::vector<NodeId> depots;   // allowed end depots
    std::optional<NodeId> anchor; // start node; the chosen depot when empty
    double start_time = 0.0;
    double prior_work = 0.0;
    double capacity = 0.0;

    friend bool operator==(const OracleVehicle&, const OracleVehicle&) = default;
};

struct OracleResult {
    double objective = 0.0;
    Solution solution;
};

namespace oracle {

struct Step {
    LinkId link;
    bool reverse;
};

struct Option {
    double cost = 0.0;
    double work = 0.0;
    NodeId depot = 0;
    std::vector<Step> order;
};

// Per subset of tasks, the cheapest way to reach each distinct working time.
using OptionTable = std::vector<std::vector<Option>>;

struct Enumerator {
    const MixedNetwork& net;
    const std::vector<LinkId>& tasks;
    const std::vector<std::optional<TimeWindow>>& windows;
    const OracleVehicle& veh;
    double vr = 0.0;
    double vn = 0.0;
    double delta = 0.0;
    double scale = 0.0;
    std::vector<std::unordered_map<std::int64_t, Option>> best; // indexed by subset mask
    std::vector<Step> path;

    NodeId head(const Step& s) const {
        const Link& l = net.link(s.link);
        return s.reverse ? l.to : l.from;
    }
    NodeId tail(const Step& s) const {
        const Link& l = net.link(s.link);
        return s.reverse ? l.from : l.to;
    }

    void record(unsigned mask, NodeId depot, NodeId at, double svc_m, double dh_m, double driven, double penalty) {
        const double back = net.dist(at, depot);
        if (back == kInfinity) return;
        const double cost = svc_m + dh_m + back + penalty;
        const double work = veh.prior_work + driven + back / vn;
        const auto key = static_cast<std::int64_t>(std::llround(work * 1e6));
        auto& slot = best[mask];
        auto it = slot.find(key);
        if (it == slot.end() || cost < it->second.cost - 1e-12) {
            slot[key] = Option{cost, work, depot, path};
        }
    }

    void dfs(unsigned mask, NodeId depot, NodeId at, double clock, double load, double svc_m, double dh_m,
             double driven, double penalty) {
        record(mask, depot, at, svc_m, dh_m, driven, penalty);
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if ((mask >> i) & 1U) continue;
            const Link& l = net.link(tasks[i]);
            const double demand = net.sprinkling_rate() * l.length;
            if (load + demand > veh.capacity + 1e-9) continue;
            const int orientations = l.kind == LinkKind::DirectionalArc ? 1 : 2;
            for (int o = 0; o < orientations; ++o) {
                const Step s{tasks[i], o == 1};
                const double d = net.dist(at, head(s));
                if (d == kInfinity) continue;
                const double t_start = clock + d / vn;
                double pen = penalty;
                if (tasks[i] < windows.size() && windows[tasks[i]]) {
                    const TimeWindow& w = *windows[tasks[i]];
                    if (t_start < w.open - 1e-9) continue;
                    const double late = t_start > w.close ? t_start - w.close : 0.0;
                    pen += delta * late * late * scale;
                }
                const double svc_t = l.length / vr;
                path.push_back(s);
                dfs(mask | (1U << i), depot, tail(s), t_start + svc_t, load + demand, svc_m + l.length, dh_m + d,
                    driven + d / vn + svc_t, pen);
                path.pop_back();
            }
        }
    }

    OptionTable run() {
        best.assign(std::size_t{1} << tasks.size(), {});
        for (NodeId depot : veh.depots) {
            const NodeId start = veh.anchor ? *veh.anchor : depot;
            path.clear();
            dfs(0U, depot, start, veh.start_time, 0.0, 0.0, 0.0, 0.0, 0.0);
        }
        OptionTable out(best.size());
        for (std::size_t m = 0; m < best.size(); ++m) {
            for (auto& [key, opt] : best[m]) out[m].push_back(std::move(opt));
            std::sort(out[m].begin(), out[m].end(), [](const Option& a, const Option& b) {
                return a.work != b.work ? a.work < b.work : a.cost < b.cost;
            });
        }
        return out;
    }
};

// Cheapest option of a subset whose working time lies in [lo, hi].
inline const Option* cheapest_within(const std::vector<Option>& opts, double lo, double hi) {
    const Option* pick = nullptr;
    for (const Option& o : opts) {
        if (o.work < lo - 1e-9) continue;
        if (o.work > hi + 1e-9) break;
        if (pick == nullptr || o.cost < pick->cost) pick = &o;
    }
    return pick;
}

} // namespace oracle

// Global optimum over assignments of tasks to vehicles, service orders,
// edge orientations and end depots, with capacity and the working-time
// spread as hard limits and lateness charged on windowed links.
inline OracleResult brute_force_optimum(const MixedNetwork& net, const std::vector<LinkId>& demands,
                                        const std::vector<OracleVehicle>& vehicles,
                                        const std::vector<std::optional<TimeWindow>>& windows,
                                        const SolverConfig& cfg, Stage stage) {
    if (demands.size() > kOracleMaxTasks) {
        throw Error(ErrorCode::TooLarge, std::to_string(demands.size()) + " tasks exceed the oracle limit");
    }
    if (vehicles.empty()) throw Error(ErrorCode::Infeasible, "no vehicles");
    for (LinkId id : demands) {
        if (id >= net.link_count() || net.link(id).is_virtual()) {
            throw Error(ErrorCode::UnknownLink, "oracle given link " + std::to_string(id));
        }
    }
    const std::size_t n = demands.size();
    const std::size_t m = vehicles.size();

    std::vector<oracle::OptionTable> tables;
    std::vector<std::size_t> table_of(m);
    for (std::size_t v = 0; v < m; ++v) {
        std::size_t found = tables.size();
        for (std::size_t u = 0; u < v; ++u) {
            if (vehicles[u] == vehicles[v]) {
                found = table_of[u];
                break;
            }
        }
        if (found == tables.size()) {
            oracle::Enumerator e{net,
                                 demands,
                                 windows,
                                 vehicles[v],
                                 cfg.sprinkling_speed_kmh * 1000.0 / 60.0,
                                 cfg.deadhead_speed_kmh * 1000.0 / 60.0,
                                 stage == Stage::Replan ? cfg.lateness_weight : 0.0,
                                 cfg.penalty_unit_scale,
                                 {},
                                 {}};
            tables.push_back(e.run());
        }
        table_of[v] = found;
    }
    // An unused vehicle in the fixed stage stays at its depot and works 0 minutes.
    if (stage == Stage::Fixed) {
        for (oracle::OptionTable& t : tables) {
            t[0].clear();
            t[0].push_back({0.0, 0.0, 0, {}});
        }
    }

    std::vector<double> lows;
    for (const oracle::OptionTable& t : tables) {
        for (const auto& opts : t) {
            for (const oracle::Option& o : opts) lows.push_back(o.work);
        }
    }
    std::sort(lows.begin(), lows.end());
    lows.erase(std::unique(lows.begin(), lows.end()), lows.end());

    double best_cost = kInfinity;
    std::vector<const oracle::Option*> best_pick;
    std::vector<unsigned> best_masks;

    std::vector<unsigned> masks(m, 0U);
    std::vector<std::size_t> owner(n, 0);
    std::vector<const oracle::Option*> pick(m);
    // Enumerate labelled assignments task -> vehicle as base-m counters.
    while (true) {
        std::fill(masks.begin(), masks.end(), 0U);
        for (std::size_t i = 0; i < n; ++i) masks[owner[i]] |= 1U << i;
        bool possible = true;
        for (std::size_t v = 0; v < m && possible; ++v) possible = !tables[table_of[v]][masks[v]].empty();
        if (possible) {
            for (double lo : lows) {
                double total = 0.0;
                bool ok = true;
                for (std::size_t v = 0; v < m && ok; ++v) {
                    pick[v] = oracle::cheapest_within(tables[table_of[v]][masks[v]], lo, lo + cfg.max_work_spread);
                    if (pick[v] == nullptr) {
                        ok = false;
                    } else {
                        total += pick[v]->cost;
                    }
                }
                if (ok && total < best_cost - 1e-9) {
                    best_cost = total;
                    best_pick = pick;
                    best_masks = masks;
                }
            }
        }
        std::size_t k = 0;
        while (k < n && ++owner[k] == m) owner[k++] = 0;
        if (k == n) break;
    }
    if (best_pick.empty()) throw Error(ErrorCode::Infeasible, "no assignment satisfies capacity and spread");

    OracleResult out;
    out.objective = best_cost;
    out.solution.stage = stage;
    out.solution.windows = windows;
    for (std::size_t v = 0; v < m; ++v) {
        Route r;
        r.vehicle = v;
        r.depot = best_masks[v] == 0U && stage == Stage::Fixed ? vehicles[v].depots.front() : best_pick[v]->depot;
        r.anchor = vehicles[v].anchor ? *vehicles[v].anchor : r.depot;
        r.start_time = vehicles[v].start_time;
        r.prior_work = vehicles[v].prior_work;
        r.capacity = vehicles[v].capacity;
        for (const oracle::Step& s : best_pick[v]->order) {
            r.tasks.push_back({s.link, s.reverse ? Direction::Reverse : Direction::Forward});
        }
        out.solution.routes.push_back(std::move(r));
    }
    return out;
}

// Fixed stage: m identical full-tank vehicles, each free to use any depot.
inline OracleResult brute_force_optimum(const MixedNetwork& net, const std::vector<LinkId>& demands, std::size_t m,
                                        const SolverConfig& cfg) {
    OracleVehicle v;
    v.depots = net.depots();
    v.capacity = cfg.capacity;
    return brute_force_optimum(net, demands, std::vector<OracleVehicle>(m, v), {}, cfg, Stage::Fixed);
}

// Vehicles of a re-planning solution as oracle inputs.
inline std::vector<OracleVehicle> oracle_vehicles(const Solution& sol) {
    std::vector<OracleVehicle> out;
    for (const Route& r : sol.routes) {
        OracleVehicle v;
        v.depots = {r.depot};
        v.anchor = r.anchor;
        v.start_time = r.start_time;
        v.prior_work = r.prior_work;
        v.capacity = r.capacity;
        out.push_back(v);
    }
    return out;
}

struct AuditReport {
    std::vector<Violation> violations;
    std::vector<std::string> diffs;
    double stated_total = 0.0;
    double recomputed_total = 0.0;

    bool passed() const { return violations.empty() && diffs.empty(); }
};

// Recomputes every route from raw link data and compares it to the cached
// route fields and their sum, then runs the feasibility check.
inline AuditReport audit_solution(const Solution& sol, const MixedNetwork& net, const SolverConfig& cfg,
                                  const std::vector<LinkId>& demands, double tolerance = 1e-6) {
    AuditReport rep;
    rep.violations = check_feasibility(sol, net, cfg, demands);
    const double vr = cfg.sprinkling_speed_kmh * 1000.0 / 60.0;
    const double vn = cfg.deadhead_speed_kmh * 1000.0 / 60.0;

    auto compare = [&](const std::string& what, double stated, double actual) {
        if (!(std::fabs(stated - actual) <= tolerance)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: stated %.9f, recomputed %.9f", what.c_str(), stated, actual);
            rep.diffs.emplace_back(buf);
        }
    };

    for (std::size_t k = 0; k < sol.routes.size(); ++k) {
        const Route& r = sol.routes[k];
        const std::string name = "route " + std::to_string(k);
        double svc = 0.0, dh = 0.0, load = 0.0, pen = 0.0, clock = r.start_time, driven = 0.0;
        NodeId at = r.anchor;
        bool broken = false;
        for (std::size_t i = 0; i < r.tasks.size(); ++i) {
            const ServiceTask& t = r.tasks[i];
            if (t.link >= net.link_count()) {
                broken = true;
                break;
            }
            const Link& l = net.link(t.link);
            const NodeId head = t.dir == Direction::Reverse ? l.to : l.from;
            const NodeId tail = t.dir == Direction::Reverse ? l.from : l.to;
            const double d = net.dist(at, head);
            dh += d;
            clock += d / vn;
            driven += d / vn;
            if (i < r.start_times.size()) compare(name + " task " + std::to_string(i) + " start", r.start_times[i], clock);
            if (t.link < sol.windows.size() && sol.windows[t.link] && sol.stage == Stage::Replan) {
                const double late = std::max(0.0, clock - sol.windows[t.link]->close);
                pen += cfg.lateness_weight * late * late * cfg.penalty_unit_scale;
            }
            svc += l.length;
            load += net.sprinkling_rate() * l.length;
            clock += l.length / vr;
            driven += l.length / vr;
            at = tail;
        }
        if (broken) {
            rep.diffs.push_back(name + ": unknown link");
            continue;
        }
        const double back = net.dist(at, r.depot);
        dh += back;
        driven += back / vn;
        compare(name + " service_m", r.service_m, svc);
        compare(name + " deadhead_m", r.deadhead_m, dh);
        compare(name + " load", r.load, load);
        compare(name + " work_time", r.work_time, r.prior_work + driven);
        if (sol.stage == Stage::Replan) compare(name + " penalty", r.penalty, pen);
        rep.recomputed_total += svc + dh + (sol.stage == Stage::Replan ? pen : 0.0);
    }
    for (const Route& r : sol.routes) {
        rep.stated_total += r.service_m + r.deadhead_m + (sol.stage == Stage::Replan ? r.penalty : 0.0);
    }
    compare("objective", rep.stated_total, rep.recomputed_total);
    return rep;
}

} // namespace dxcarp

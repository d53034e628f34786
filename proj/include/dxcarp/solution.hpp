#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dxcarp/config.hpp"
#include "dxcarp/error.hpp"
#include "dxcarp/network.hpp"

namespace dxcarp {

enum class Direction : std::uint8_t { Forward, Reverse };

// One demand link together with the direction it is sprinkled in.
struct ServiceTask {
    LinkId link = 0;
    Direction dir = Direction::Forward;

    friend bool operator==(const ServiceTask&, const ServiceTask&) = default;
};

inline NodeId task_start(const MixedNetwork& net, const ServiceTask& t) {
    const Link& l = net.link(t.link);
    return t.dir == Direction::Forward ? l.from : l.to;
}

inline NodeId task_end(const MixedNetwork& net, const ServiceTask& t) {
    const Link& l = net.link(t.link);
    return t.dir == Direction::Forward ? l.to : l.from;
}

// Orientations a link may legally be served in.
inline std::vector<Direction> allowed_directions(const MixedNetwork& net, LinkId id) {
    if (net.link(id).kind == LinkKind::NonDirectionalEdge) return {Direction::Forward, Direction::Reverse};
    return {Direction::Forward};
}

struct TimeWindow {
    double open = 0.0;  // a_n, minutes
    double close = 0.0; // b_n, minutes

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

enum class Stage : std::uint8_t { Fixed, Replan };

struct Route {
    std::size_t vehicle = 0;
    NodeId depot = 0;        // where the route ends (and starts, in the fixed stage)
    NodeId anchor = 0;       // where the route starts
    double start_time = 0.0; // clock when leaving the anchor
    double prior_work = 0.0; // minutes already worked before the anchor
    double capacity = 0.0;   // water available for the listed tasks
    std::vector<ServiceTask> tasks;

    // Caches, rebuilt by refresh_route.
    double load = 0.0;
    double service_m = 0.0;
    double deadhead_m = 0.0;
    double work_time = 0.0;
    double penalty = 0.0;
    std::vector<double> start_times;
    std::vector<std::size_t> windowed; // positions of tasks carrying a window
};

struct ServiceRecord {
    LinkId link = 0;
    double completed_at = 0.0;

    friend bool operator==(const ServiceRecord&, const ServiceRecord&) = default;
};

struct Solution {
    Stage stage = Stage::Fixed;
    std::vector<Route> routes;
    // Indexed by link id; empty while no link carries a window.
    std::vector<std::optional<TimeWindow>> windows;
    // Tasks completed before the current anchors, in completion order.
    std::vector<ServiceRecord> history;

    const TimeWindow* window(LinkId id) const {
        if (id >= windows.size() || !windows[id]) return nullptr;
        return &*windows[id];
    }

    void set_window(LinkId id, TimeWindow w, std::size_t link_count) {
        if (windows.size() < link_count) windows.resize(link_count);
        windows.at(id) = w;
    }

    std::size_t task_count() const {
        std::size_t n = 0;
        for (const Route& r : routes) n += r.tasks.size();
        return n;
    }
};

struct ObjectiveBreakdown {
    double service_distance = 0.0;
    double deadhead_distance = 0.0;
    double window_penalty = 0.0;
    double total = 0.0;
};

struct RouteTiming {
    std::vector<double> start_times;
    double work_time = 0.0;
};

inline double lateness_penalty(double start, const TimeWindow& w, const SolverConfig& cfg) {
    const double late = std::max(0.0, start - w.close);
    return cfg.lateness_weight * late * late * cfg.penalty_unit_scale;
}

namespace detail {

inline void require_task(const MixedNetwork& net, const ServiceTask& t) {
    if (t.link >= net.link_count() || net.link(t.link).is_virtual()) {
        throw Error(ErrorCode::UnknownLink, "task references link " + std::to_string(t.link));
    }
    if (t.dir == Direction::Reverse && net.link(t.link).kind == LinkKind::DirectionalArc) {
        throw Error(ErrorCode::IllegalDirection,
                    "arc " + std::to_string(net.link(t.link).external_id) + " served against its direction");
    }
}

} // namespace detail

// Service start times along a route: the first task starts after the deadhead
// from the anchor, each later one after the previous task's service and the
// connecting deadhead. Work time adds the return leg to the depot.
inline RouteTiming propagate_times(const Route& route, const MixedNetwork& net, const SolverConfig& cfg) {
    const double vr = cfg.service_speed();
    const double vn = cfg.deadhead_speed();
    RouteTiming out;
    out.start_times.reserve(route.tasks.size());
    double clock = route.start_time;
    double driven = 0.0;
    NodeId at = route.anchor;
    for (const ServiceTask& t : route.tasks) {
        const double dh = deadhead(net, at, task_start(net, t));
        clock += dh / vn;
        driven += dh / vn;
        out.start_times.push_back(clock);
        const double svc = net.link(t.link).length / vr;
        clock += svc;
        driven += svc;
        at = task_end(net, t);
    }
    driven += deadhead(net, at, route.depot) / vn;
    out.work_time = route.prior_work + driven;
    return out;
}

inline void refresh_route(Route& route, const Solution& sol, const MixedNetwork& net, const SolverConfig& cfg) {
    route.load = 0.0;
    route.service_m = 0.0;
    route.deadhead_m = 0.0;
    route.penalty = 0.0;
    route.windowed.clear();
    NodeId at = route.anchor;
    for (const ServiceTask& t : route.tasks) {
        route.load += net.service_demand(t.link);
        route.service_m += net.link(t.link).length;
        route.deadhead_m += deadhead(net, at, task_start(net, t));
        at = task_end(net, t);
    }
    route.deadhead_m += deadhead(net, at, route.depot);
    RouteTiming timing = propagate_times(route, net, cfg);
    route.start_times = std::move(timing.start_times);
    route.work_time = timing.work_time;
    for (std::size_t i = 0; i < route.tasks.size(); ++i) {
        if (const TimeWindow* w = sol.window(route.tasks[i].link)) {
            route.windowed.push_back(i);
            route.penalty += lateness_penalty(route.start_times[i], *w, cfg);
        }
    }
}

inline void refresh(Solution& sol, const MixedNetwork& net, const SolverConfig& cfg) {
    for (Route& r : sol.routes) refresh_route(r, sol, net, cfg);
}

// Full recomputation from link data; ignores every cached field.
inline ObjectiveBreakdown evaluate(const Solution& sol, const MixedNetwork& net, const SolverConfig& cfg) {
    ObjectiveBreakdown b;
    for (const Route& r : sol.routes) {
        NodeId at = r.anchor;
        for (const ServiceTask& t : r.tasks) {
            detail::require_task(net, t);
            b.service_distance += net.link(t.link).length;
            b.deadhead_distance += deadhead(net, at, task_start(net, t));
            at = task_end(net, t);
        }
        if (sol.stage == Stage::Fixed && r.tasks.empty()) continue;
        b.deadhead_distance += deadhead(net, at, r.depot);
        if (sol.stage == Stage::Replan && !sol.windows.empty()) {
            const RouteTiming timing = propagate_times(r, net, cfg);
            for (std::size_t i = 0; i < r.tasks.size(); ++i) {
                if (const TimeWindow* w = sol.window(r.tasks[i].link)) {
                    b.window_penalty += lateness_penalty(timing.start_times[i], *w, cfg);
                }
            }
        }
    }
    b.total = b.service_distance + b.deadhead_distance + b.window_penalty;
    return b;
}

// Sum of the cached route fields. Equal to evaluate() whenever caches are fresh.
inline ObjectiveBreakdown cached_objective(const Solution& sol) {
    ObjectiveBreakdown b;
    for (const Route& r : sol.routes) {
        b.service_distance += r.service_m;
        b.deadhead_distance += r.deadhead_m;
        if (sol.stage == Stage::Replan) b.window_penalty += r.penalty;
    }
    b.total = b.service_distance + b.deadhead_distance + b.window_penalty;
    return b;
}

inline double work_spread(const Solution& sol) {
    if (sol.routes.empty()) return 0.0;
    double lo = kInfinity;
    double hi = -kInfinity;
    for (const Route& r : sol.routes) {
        lo = std::min(lo, r.work_time);
        hi = std::max(hi, r.work_time);
    }
    return hi - lo;
}

inline constexpr double kFeasibilityTolerance = 1e-6;

inline bool spread_feasible(const Solution& sol, const SolverConfig& cfg) {
    return work_spread(sol) <= cfg.max_work_spread + kFeasibilityTolerance;
}

// Objective used inside the search: total plus a linear charge on the
// working-time spread in excess of T_dif.
inline double search_objective(const Solution& sol, const SolverConfig& cfg) {
    const double excess = std::max(0.0, work_spread(sol) - cfg.max_work_spread);
    return cached_objective(sol).total + cfg.balance_weight * excess;
}

// ---------------------------------------------------------------------------
// Feasibility

enum class ViolationKind : std::uint8_t {
    MissingDemand,
    DuplicateService,
    WrongDirection,
    UnknownLink,
    ExtraService,
    CapacityExceeded,  // (8)
    WorkTimeSpread,    // (13)
    BadDepotClosure,   // (9)/(10)
    EarlyWindowStart,  // (20)
};

inline const char* to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::MissingDemand: return "MissingDemand";
    case ViolationKind::DuplicateService: return "DuplicateService";
    case ViolationKind::WrongDirection: return "WrongDirection";
    case ViolationKind::UnknownLink: return "UnknownLink";
    case ViolationKind::ExtraService: return "ExtraService";
    case ViolationKind::CapacityExceeded: return "CapacityExceeded";
    case ViolationKind::WorkTimeSpread: return "WorkTimeSpread";
    case ViolationKind::BadDepotClosure: return "BadDepotClosure";
    case ViolationKind::EarlyWindowStart: return "EarlyWindowStart";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    std::optional<std::size_t> route;
    std::optional<LinkId> link;
    std::string detail;
};

inline bool has_violation(const std::vector<Violation>& report, ViolationKind kind) {
    return std::any_of(report.begin(), report.end(), [kind](const Violation& v) { return v.kind == kind; });
}

// Never throws; recomputes loads and timings from the task lists.
inline std::vector<Violation> check_feasibility(const Solution& sol, const MixedNetwork& net,
                                                const SolverConfig& cfg, const std::vector<LinkId>& demand_set) {
    std::vector<Violation> out;
    std::vector<int> served(net.link_count(), 0);
    std::vector<bool> demanded(net.link_count(), false);
    for (LinkId id : demand_set) {
        if (id < demanded.size()) demanded[id] = true;
    }

    double lo = kInfinity;
    double hi = -kInfinity;
    for (std::size_t ri = 0; ri < sol.routes.size(); ++ri) {
        const Route& r = sol.routes[ri];
        if (r.depot >= net.node_count() || !net.is_depot(r.depot)) {
            out.push_back({ViolationKind::BadDepotClosure, ri, std::nullopt, "route does not end at a depot"});
        }
        if (sol.stage == Stage::Fixed && r.anchor != r.depot) {
            out.push_back({ViolationKind::BadDepotClosure, ri, std::nullopt, "route does not start at its depot"});
        }
        if (r.anchor >= net.node_count()) {
            out.push_back({ViolationKind::BadDepotClosure, ri, std::nullopt, "route anchor is not a node"});
            continue;
        }
        bool structurally_ok = true;
        double load = 0.0;
        for (const ServiceTask& t : r.tasks) {
            if (t.link >= net.link_count() || net.link(t.link).is_virtual()) {
                out.push_back({ViolationKind::UnknownLink, ri, t.link, "not a serviceable link"});
                structurally_ok = false;
                continue;
            }
            if (t.dir == Direction::Reverse && net.link(t.link).kind == LinkKind::DirectionalArc) {
                out.push_back({ViolationKind::WrongDirection, ri, t.link, "arc served in reverse"});
            }
            ++served[t.link];
            load += net.service_demand(t.link);
        }
        const double cap = sol.stage == Stage::Fixed ? cfg.capacity : r.capacity;
        if (load > cap + kFeasibilityTolerance) {
            out.push_back({ViolationKind::CapacityExceeded, ri, std::nullopt,
                           "load " + std::to_string(load) + " > " + std::to_string(cap)});
        }
        if (!structurally_ok) continue;
        const RouteTiming timing = propagate_times(r, net, cfg);
        lo = std::min(lo, timing.work_time);
        hi = std::max(hi, timing.work_time);
        for (std::size_t i = 0; i < r.tasks.size(); ++i) {
            const TimeWindow* w = sol.window(r.tasks[i].link);
            if (w && timing.start_times[i] < w->open - kFeasibilityTolerance) {
                out.push_back({ViolationKind::EarlyWindowStart, ri, r.tasks[i].link,
                               "starts at " + std::to_string(timing.start_times[i])});
            }
        }
    }
    if (!sol.routes.empty() && hi - lo > cfg.max_work_spread + kFeasibilityTolerance) {
        out.push_back({ViolationKind::WorkTimeSpread, std::nullopt, std::nullopt,
                       "spread " + std::to_string(hi - lo) + " min"});
    }
    for (LinkId id = 0; id < net.link_count(); ++id) {
        if (served[id] > 1) out.push_back({ViolationKind::DuplicateService, std::nullopt, id, ""});
        if (demanded[id] && served[id] == 0) out.push_back({ViolationKind::MissingDemand, std::nullopt, id, ""});
        if (!demanded[id] && served[id] > 0) out.push_back({ViolationKind::ExtraService, std::nullopt, id, ""});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Incremental evaluation. All functions below read the route caches, which
// must be fresh.

struct InsertionEval {
    double cost_delta = 0.0; // change of the objective total
    double work_delta = 0.0; // change of the route's working time
    bool capacity_ok = true;
};

inline InsertionEval evaluate_insertion(const Solution& sol, std::size_t route_idx, std::size_t pos,
                                        const ServiceTask& task, const MixedNetwork& net, const SolverConfig& cfg) {
    const Route& r = sol.routes[route_idx];
    const Link& link = net.link(task.link);
    const NodeId s = task_start(net, task);
    const NodeId e = task_end(net, task);
    const NodeId prev = pos == 0 ? r.anchor : task_end(net, r.tasks[pos - 1]);
    const NodeId next = pos == r.tasks.size() ? r.depot : task_start(net, r.tasks[pos]);

    const double vr = cfg.service_speed();
    const double vn = cfg.deadhead_speed();
    const double in_dh = net.dist(prev, s);
    const double out_dh = net.dist(e, next);
    // An empty fixed-stage route has no closing leg to replace.
    const double old_dh = (sol.stage == Stage::Fixed && r.tasks.empty()) ? 0.0 : net.dist(prev, next);
    const double dh_delta = in_dh + out_dh - old_dh;

    InsertionEval ev;
    ev.capacity_ok = r.load + net.service_demand(task.link) <= r.capacity + kFeasibilityTolerance;
    ev.work_delta = link.length / vr + dh_delta / vn;
    ev.cost_delta = link.length + dh_delta;

    if (sol.stage == Stage::Replan) {
        const TimeWindow* w = sol.window(task.link);
        if (w) {
            const double arrive_prev =
                pos == 0 ? r.start_time : r.start_times[pos - 1] + net.link(r.tasks[pos - 1].link).length / vr;
            ev.cost_delta += lateness_penalty(arrive_prev + in_dh / vn, *w, cfg);
        }
        const double shift = ev.work_delta;
        auto it = std::lower_bound(r.windowed.begin(), r.windowed.end(), pos);
        for (; it != r.windowed.end(); ++it) {
            const TimeWindow& tw = *sol.window(r.tasks[*it].link);
            const double before = r.start_times[*it];
            ev.cost_delta += lateness_penalty(before + shift, tw, cfg) - lateness_penalty(before, tw, cfg);
        }
    }
    return ev;
}

// Objective change of inserting task at position pos of route route_idx.
inline double delta_insert_cost(const Solution& sol, std::size_t route_idx, std::size_t pos,
                                const ServiceTask& task, const MixedNetwork& net, const SolverConfig& cfg) {
    detail::require_task(net, task);
    if (route_idx >= sol.routes.size() || pos > sol.routes[route_idx].tasks.size()) {
        throw std::out_of_range("insertion position out of range");
    }
    const InsertionEval ev = evaluate_insertion(sol, route_idx, pos, task, net, cfg);
    if (!ev.capacity_ok) {
        throw Error(ErrorCode::CapacityExceeded, "insertion exceeds the route's water budget");
    }
    return ev.cost_delta;
}

struct RemovalEval {
    double cost_delta = 0.0; // negative when removal saves distance
    double work_delta = 0.0;
};

inline RemovalEval evaluate_removal(const Solution& sol, std::size_t route_idx, std::size_t pos,
                                    const MixedNetwork& net, const SolverConfig& cfg) {
    const Route& r = sol.routes[route_idx];
    const ServiceTask& task = r.tasks[pos];
    const Link& link = net.link(task.link);
    const NodeId prev = pos == 0 ? r.anchor : task_end(net, r.tasks[pos - 1]);
    const NodeId next = pos + 1 == r.tasks.size() ? r.depot : task_start(net, r.tasks[pos + 1]);
    const double vr = cfg.service_speed();
    const double vn = cfg.deadhead_speed();
    const double new_dh = (sol.stage == Stage::Fixed && r.tasks.size() == 1) ? 0.0 : net.dist(prev, next);
    const double dh_delta = new_dh - net.dist(prev, task_start(net, task)) - net.dist(task_end(net, task), next);

    RemovalEval ev;
    ev.work_delta = -link.length / vr + dh_delta / vn;
    ev.cost_delta = -link.length + dh_delta;
    if (sol.stage == Stage::Replan) {
        for (std::size_t wp : r.windowed) {
            const TimeWindow& tw = *sol.window(r.tasks[wp].link);
            const double before = r.start_times[wp];
            if (wp == pos) {
                ev.cost_delta -= lateness_penalty(before, tw, cfg);
            } else if (wp > pos) {
                ev.cost_delta += lateness_penalty(before + ev.work_delta, tw, cfg) - lateness_penalty(before, tw, cfg);
            }
        }
    }
    return ev;
}

inline void insert_task(Solution& sol, std::size_t route_idx, std::size_t pos, const ServiceTask& task,
                        const MixedNetwork& net, const SolverConfig& cfg) {
    Route& r = sol.routes.at(route_idx);
    r.tasks.insert(r.tasks.begin() + static_cast<std::ptrdiff_t>(pos), task);
    refresh_route(r, sol, net, cfg);
}

inline ServiceTask remove_task(Solution& sol, std::size_t route_idx, std::size_t pos, const MixedNetwork& net,
                               const SolverConfig& cfg) {
    Route& r = sol.routes.at(route_idx);
    const ServiceTask t = r.tasks.at(pos);
    r.tasks.erase(r.tasks.begin() + static_cast<std::ptrdiff_t>(pos));
    refresh_route(r, sol, net, cfg);
    return t;
}

// Order-sensitive 64-bit hash of depots, anchors and task sequences.
inline std::uint64_t fingerprint(const Solution& sol) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 1099511628211ULL;
    };
    for (std::size_t i = 0; i < sol.routes.size(); ++i) {
        const Route& r = sol.routes[i];
        mix(i);
        mix(r.depot);
        mix(r.anchor);
        for (const ServiceTask& t : r.tasks) {
            mix((static_cast<std::uint64_t>(t.link) << 1) | (t.dir == Direction::Reverse ? 1U : 0U));
        }
        mix(0xffffffffULL);
    }
    return h;
}

} // namespace dxcarp

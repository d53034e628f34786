#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "dxcarp/alns.hpp"
#include "dxcarp/config.hpp"
#include "dxcarp/construct.hpp"
#include "dxcarp/error.hpp"
#include "dxcarp/operators.hpp"
#include "dxcarp/rng.hpp"
#include "dxcarp/solution.hpp"

namespace dxcarp {

// A batch of links that must be sprinkled within [receipt, receipt + window].
struct DemandEvent {
    double receipt_time = 0.0;
    std::vector<LinkId> links;
    double window_length = 30.0;

    TimeWindow window() const { return {receipt_time, receipt_time + window_length}; }
};

struct VehicleState {
    std::size_t vehicle = 0;
    NodeId position = 0;       // end node of the last committed task
    double remaining_water = 0.0;
    std::vector<ServiceTask> served;
    std::vector<ServiceTask> pending;
    double elapsed = 0.0;      // minutes worked up to the position
    double available_at = 0.0; // clock from which the vehicle can be re-routed
    double traveled_m = 0.0;   // meters driven by the committed part of the route
};

// Last completion time per link.
class ServiceLog {
public:
    explicit ServiceLog(std::size_t link_count = 0) : last_(link_count) {}

    void record(LinkId link, double completed_at) {
        if (link >= last_.size()) last_.resize(link + 1);
        if (!last_[link] || *last_[link] < completed_at) last_[link] = completed_at;
    }

    std::optional<double> last(LinkId link) const {
        if (link >= last_.size()) return std::nullopt;
        return last_[link];
    }

private:
    std::vector<std::optional<double>> last_;
};

struct ProjectedState {
    std::vector<VehicleState> vehicles;
    ServiceLog log;
    std::vector<ServiceRecord> newly_served; // completion order

    double traveled_m() const {
        double d = 0.0;
        for (const VehicleState& v : vehicles) d += v.traveled_m;
        return d;
    }
};

// Replays every route up to clock t. A task that has started by t is
// committed and will be finished before the vehicle is diverted.
inline ProjectedState project_state(const Solution& sol, const MixedNetwork& net, const SolverConfig& cfg, double t) {
    ProjectedState out;
    out.log = ServiceLog(net.link_count());
    for (const ServiceRecord& rec : sol.history) out.log.record(rec.link, rec.completed_at);

    const double vr = cfg.service_speed();
    const double vn = cfg.deadhead_speed();
    for (const Route& r : sol.routes) {
        const RouteTiming timing = propagate_times(r, net, cfg);
        VehicleState v;
        v.vehicle = r.vehicle;
        v.position = r.anchor;
        v.remaining_water = r.capacity;
        v.elapsed = r.prior_work;
        double clock = r.start_time;
        NodeId at = r.anchor;
        for (std::size_t i = 0; i < r.tasks.size(); ++i) {
            const ServiceTask& task = r.tasks[i];
            if (timing.start_times[i] < t && v.pending.empty()) {
                const double dh = net.dist(at, task_start(net, task));
                const double len = net.link(task.link).length;
                clock = timing.start_times[i] + len / vr;
                v.elapsed += dh / vn + len / vr;
                v.traveled_m += dh + len;
                v.remaining_water -= net.service_demand(task.link);
                v.served.push_back(task);
                out.log.record(task.link, clock);
                out.newly_served.push_back({task.link, clock});
                at = task_end(net, task);
            } else {
                v.pending.push_back(task);
            }
        }
        if (v.pending.empty()) {
            const double back = net.dist(at, r.depot);
            if (clock + back / vn <= t) {
                clock += back / vn;
                v.elapsed += back / vn;
                v.traveled_m += back;
                at = r.depot;
            }
        }
        v.position = at;
        v.available_at = std::max(t, clock);
        out.vehicles.push_back(std::move(v));
    }
    std::stable_sort(out.newly_served.begin(), out.newly_served.end(),
                     [](const ServiceRecord& a, const ServiceRecord& b) { return a.completed_at < b.completed_at; });
    return out;
}

struct Classification {
    std::vector<LinkId> bring_forward; // planned, not yet served
    std::vector<LinkId> skip_recent;   // served within the recency horizon
    std::vector<LinkId> must_add;      // served long ago or never planned
};

inline Classification classify_new_demands(const DemandEvent& event, const ProjectedState& state,
                                           const MixedNetwork& net, const SolverConfig& cfg) {
    std::set<LinkId> pending;
    for (const VehicleState& v : state.vehicles) {
        for (const ServiceTask& t : v.pending) pending.insert(t.link);
    }
    std::set<LinkId> links(event.links.begin(), event.links.end());
    Classification c;
    for (LinkId id : links) {
        if (id >= net.link_count() || net.link(id).is_virtual()) {
            throw Error(ErrorCode::UnknownLink, "event references link " + std::to_string(id));
        }
        if (pending.count(id) != 0) {
            c.bring_forward.push_back(id);
            continue;
        }
        const std::optional<double> last = state.log.last(id);
        if (last && event.receipt_time - *last < cfg.recency) {
            c.skip_recent.push_back(id);
        } else {
            c.must_add.push_back(id);
        }
    }
    return c;
}

inline double total_remaining_water(const ProjectedState& state) {
    double w = 0.0;
    for (const VehicleState& v : state.vehicles) w += v.remaining_water;
    return w;
}

inline double pending_demand(const ProjectedState& state, const MixedNetwork& net) {
    double d = 0.0;
    for (const VehicleState& v : state.vehicles) {
        for (const ServiceTask& t : v.pending) d += net.service_demand(t.link);
    }
    return d;
}

// All must_add links when the fleet's water covers them on top of the
// unserved plan; otherwise a uniformly random subset that fits the surplus.
inline std::vector<LinkId> select_addable(const std::vector<LinkId>& must_add, double unserved_plan_demand,
                                          double remaining_water, const MixedNetwork& net, Rng& rng) {
    double need = unserved_plan_demand;
    for (LinkId id : must_add) need += net.service_demand(id);
    if (remaining_water + kFeasibilityTolerance >= need) return must_add;

    double surplus = remaining_water - unserved_plan_demand;
    std::vector<LinkId> order = must_add;
    rng.shuffle(order);
    std::vector<LinkId> added;
    for (LinkId id : order) {
        const double d = net.service_demand(id);
        if (d <= surplus + kFeasibilityTolerance) {
            added.push_back(id);
            surplus -= d;
        }
    }
    std::sort(added.begin(), added.end());
    return added;
}

struct ReplanBase {
    Solution solution;            // S_D
    std::vector<LinkId> windowed; // links given the event's window
    std::vector<LinkId> deferred; // admitted links no single tank could take
};

// Strips served tasks, re-anchors each route at the vehicle's position (its
// end depot is kept), gives every windowed link the event's window and
// inserts those links with the time-window repair.
inline ReplanBase build_replan_base(const Solution& sol, const ProjectedState& state,
                                    const std::vector<LinkId>& bring_forward, const std::vector<LinkId>& added,
                                    const DemandEvent& event, const MixedNetwork& net, const SolverConfig& cfg) {
    ReplanBase out;
    Solution base;
    base.stage = Stage::Replan;
    base.windows = sol.windows;
    base.history = sol.history;
    for (const ServiceRecord& rec : state.newly_served) base.history.push_back(rec);

    std::set<LinkId> windowed(bring_forward.begin(), bring_forward.end());
    windowed.insert(added.begin(), added.end());
    for (LinkId id : windowed) base.set_window(id, event.window(), net.link_count());

    for (std::size_t i = 0; i < sol.routes.size(); ++i) {
        const Route& old = sol.routes[i];
        const VehicleState& v = state.vehicles[i];
        Route r;
        r.vehicle = old.vehicle;
        r.depot = old.depot;
        r.anchor = v.position;
        r.start_time = v.available_at;
        r.prior_work = v.elapsed;
        r.capacity = v.remaining_water;
        for (const ServiceTask& t : v.pending) {
            if (windowed.count(t.link) == 0) r.tasks.push_back(t);
        }
        base.routes.push_back(std::move(r));
    }
    refresh(base, net, cfg);

    RepairOptions opt;
    opt.accel_ratio = cfg.effective_accel_ratio();
    std::vector<ServiceTask> removed;
    for (LinkId id : windowed) removed.push_back({id, Direction::Forward});
    try {
        out.solution = repair_time_window(RemovalResult{base, removed}, net, cfg, opt);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoFeasibleInsertion) throw;
        // One link at a time, planned links first; admitted links that no tank
        // can take are deferred.
        const std::set<LinkId> planned(bring_forward.begin(), bring_forward.end());
        std::vector<LinkId> order(bring_forward.begin(), bring_forward.end());
        for (LinkId id : added) {
            if (planned.count(id) == 0) order.push_back(id);
        }
        Solution cur = base;
        for (LinkId id : order) {
            try {
                cur = repair_time_window(RemovalResult{cur, {{id, Direction::Forward}}}, net, cfg, opt);
            } catch (const Error& inner) {
                if (inner.code() != ErrorCode::NoFeasibleInsertion || planned.count(id) != 0) throw;
                out.deferred.push_back(id);
                cur.windows[id].reset();
            }
        }
        out.solution = std::move(cur);
    }
    refresh(out.solution, net, cfg);
    for (LinkId id : windowed) {
        if (std::find(out.deferred.begin(), out.deferred.end(), id) == out.deferred.end()) out.windowed.push_back(id);
    }
    return out;
}

struct ReplanResult {
    Solution plan; // S_D*
    Solution base; // S_D
    ProjectedState state;
    Classification classes;
    std::vector<LinkId> added;
    std::vector<LinkId> deferred;
    double water_available = 0.0;
    double water_needed = 0.0;
    ObjectiveBreakdown before;
    ObjectiveBreakdown after;
    AlnsResult search;
};

// Enforces the working-time spread on a search result, rebalancing if needed.
inline Solution finalize_spread(Solution sol, const MixedNetwork& net, const SolverConfig& cfg) {
    refresh(sol, net, cfg);
    if (spread_feasible(sol, cfg)) return sol;
    return balance_workload(std::move(sol), net, cfg);
}

inline ReplanResult replan(const Solution& sol, const DemandEvent& event, const MixedNetwork& net,
                           const SolverConfig& cfg, Rng& rng, const AlnsOptions& options = {}) {
    ReplanResult out;
    out.state = project_state(sol, net, cfg, event.receipt_time);
    out.classes = classify_new_demands(event, out.state, net, cfg);
    out.water_available = total_remaining_water(out.state);
    const double planned = pending_demand(out.state, net);
    out.water_needed = planned;
    for (LinkId id : out.classes.must_add) out.water_needed += net.service_demand(id);
    out.added = select_addable(out.classes.must_add, planned, out.water_available, net, rng);

    ReplanBase base = build_replan_base(sol, out.state, out.classes.bring_forward, out.added, event, net, cfg);
    out.deferred = std::move(base.deferred);
    out.base = std::move(base.solution);
    out.before = evaluate(out.base, net, cfg);

    out.search = run_alns(out.base, net, cfg, rng, options);
    out.plan = finalize_spread(out.search.best, net, cfg);
    out.after = evaluate(out.plan, net, cfg);
    return out;
}

// Demand links a re-planned solution must cover: everything still planned
// plus the admitted links.
inline std::vector<LinkId> required_links(const Solution& sol) {
    std::vector<LinkId> out;
    for (const Route& r : sol.routes) {
        for (const ServiceTask& t : r.tasks) out.push_back(t.link);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace dxcarp

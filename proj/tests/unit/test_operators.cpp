#include <gtest/gtest.h>

#include <map>
#include <set>

#include "support.hpp"

using namespace dxt;

namespace {

// Mid-operation copy of a scrambled plan without windows: anchors at the
// depots, no depot re-optimisation, so every delta is an integer sum.
Solution open_plan(const Instance& in, std::size_t m, const SolverConfig& cfg, Rng& rng) {
    Solution s = scrambled(in, m, cfg, rng);
    s.stage = Stage::Replan;
    refresh(s, in.net, cfg);
    return s;
}

SolverConfig loose() {
    SolverConfig cfg;
    cfg.max_work_spread = 1e9;
    return cfg;
}

// Full-recompute insertion cost of every legal (route, pos, dir), in scan order.
struct Slot {
    std::size_t route, pos;
    ServiceTask task;
    double cost;
};

std::vector<Slot> all_slots(const Solution& s, LinkId link, const MixedNetwork& net, const SolverConfig& cfg) {
    const double before = evaluate(s, net, cfg).total;
    std::vector<Slot> out;
    for (std::size_t r = 0; r < s.routes.size(); ++r) {
        if (s.routes[r].load + net.service_demand(link) > s.routes[r].capacity + 1e-6) continue;
        for (std::size_t p = 0; p <= s.routes[r].tasks.size(); ++p) {
            for (Direction d : allowed_directions(net, link)) {
                Solution t = s;
                t.routes[r].tasks.insert(t.routes[r].tasks.begin() + static_cast<std::ptrdiff_t>(p), {link, d});
                out.push_back({r, p, {link, d}, evaluate(t, net, cfg).total - before});
            }
        }
    }
    return out;
}

void put(Solution& s, const Slot& slot, const MixedNetwork& net, const SolverConfig& cfg) {
    insert_task(s, slot.route, slot.pos, slot.task, net, cfg);
}

std::vector<LinkId> sorted(std::vector<ServiceTask> v) {
    std::vector<LinkId> out;
    for (const ServiceTask& t : v) out.push_back(t.link);
    std::sort(out.begin(), out.end());
    return out;
}

// B(-100) -80- (-20) =X(10)= (-10) -10- A(0) -30- (30) =Y(10)= (40)
MixedNetwork blocking_line() {
    return build_network(spec_of({1, 2, 3, 4, 5, 6}, {4, 1},
                                 {edge(1, 1, 2, 80.0, false), edge(2, 2, 3, 10.0), edge(3, 3, 4, 10.0, false),
                                  edge(4, 4, 5, 30.0, false), edge(5, 5, 6, 10.0)}));
}

Solution blocking_start(const MixedNetwork& net, const SolverConfig& cfg) {
    Solution s;
    s.stage = Stage::Replan;
    for (std::int64_t d : {4, 1}) {
        Route r = fixed_route(s.routes.size(), net.node_of(d), {}, cfg);
        r.capacity = d == 4 ? 10.0 : 1000.0;
        s.routes.push_back(r);
    }
    refresh(s, net, cfg);
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
// destroy

TEST(RemovalCount, FractionOfTasks) {
    EXPECT_EQ(removal_count(0.1, 1), 1U);
    EXPECT_EQ(removal_count(0.1, 100), 10U);
    EXPECT_EQ(removal_count(0.1, 4), 1U);
    EXPECT_EQ(removal_count(0.1, 15), 2U);
    EXPECT_EQ(removal_count(0.2, 148), 30U);
    EXPECT_EQ(removal_count(0.1, 0), 0U);
}

TEST(DestroyRandom, SingleTask) {
    const MixedNetwork net = two_node();
    const SolverConfig cfg;
    const Solution s = fixed_solution({fixed_route(0, 0, {{0, Direction::Forward}}, cfg)}, net, cfg);
    Rng rng(1);
    const RemovalResult rr = destroy_random(s, 0.1, net, cfg, rng);
    ASSERT_EQ(rr.removed.size(), 1U);
    EXPECT_EQ(rr.removed[0].link, 0U);
    EXPECT_EQ(rr.partial.task_count(), 0U);
}

TEST(DestroyRandom, UniformFrequencies) {
    const Instance in = grid(8, 8, 100.0, 1.0, 0.0, 1, 1);
    ASSERT_GE(in.demands.size(), 100U);
    const SolverConfig cfg;
    Solution s = fixed_solution({fixed_route(0, in.net.depots()[0], {}, cfg)}, in.net, cfg);
    for (std::size_t i = 0; i < 100; ++i) s.routes[0].tasks.push_back({in.demands[i], Direction::Forward});
    refresh(s, in.net, cfg);
    Rng rng(42);
    std::map<LinkId, int> hits;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const RemovalResult rr = destroy_random(s, 0.1, in.net, cfg, rng);
        ASSERT_EQ(rr.removed.size(), 10U);
        ASSERT_EQ(rr.partial.task_count(), 90U);
        for (const ServiceTask& t : rr.removed) ++hits[t.link];
    }
    for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_NEAR(hits[in.demands[i]] / static_cast<double>(draws), 0.10, 0.01);
    }
}

TEST(DestroyWorst, DetourGoesFirst) {
    // street 1-2-3-4 with demand, plus a demand edge 2.5 km up a side road from 2
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 3, 4, 9, 10}, {1},
        {edge(1, 1, 2, 100.0), edge(2, 2, 3, 100.0), edge(3, 3, 4, 100.0), edge(4, 2, 9, 2500.0, false),
         edge(5, 9, 10, 100.0), edge(6, 4, 1, 300.0, false)}));
    const SolverConfig cfg = loose();
    auto t = [&](std::int64_t ext) { return ServiceTask{net.link_of(ext), Direction::Forward}; };
    const Solution s = fixed_solution({fixed_route(0, net.node_of(1), {t(1), t(5), t(2), t(3)}, cfg)}, net, cfg);
    const RemovalResult rr = destroy_worst(s, 0.1, net, cfg);
    ASSERT_EQ(rr.removed.size(), 1U);
    EXPECT_EQ(rr.removed[0].link, net.link_of(5));
}

TEST(DestroyWorst, TiesGoToLowestLink) {
    const MixedNetwork net = build_network(spec_of({1, 2}, {1}, {edge(7, 1, 2, 100.0), edge(3, 1, 2, 100.0)}));
    const SolverConfig cfg = loose();
    const Solution s = fixed_solution({fixed_route(0, 0, {{0, Direction::Forward}}, cfg),
                                       fixed_route(1, 0, {{1, Direction::Forward}}, cfg)},
                                      net, cfg);
    const RemovalResult rr = destroy_worst(s, 0.1, net, cfg);
    ASSERT_EQ(rr.removed.size(), 1U);
    EXPECT_EQ(rr.removed[0].link, 0U);
}

TEST(DestroyWorst, EachPickHasTheLargestGain) {
    Rng rng(3);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 20; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.8, 0.4, 2, 60 + trial);
        Solution s = scrambled(in, 3, cfg, rng);
        if (trial % 2 == 1) make_replan(s, in, cfg, rng);
        const RemovalResult rr = destroy_worst(s, 0.3, in.net, cfg);
        Solution cur = s;
        for (const ServiceTask& picked : rr.removed) {
            const double base = evaluate(cur, in.net, cfg).total;
            double best = -kInfinity, chosen = kInfinity;
            std::size_t cr = 0, cp = 0;
            for (std::size_t r = 0; r < cur.routes.size(); ++r) {
                for (std::size_t p = 0; p < cur.routes[r].tasks.size(); ++p) {
                    Solution t = cur;
                    t.routes[r].tasks.erase(t.routes[r].tasks.begin() + static_cast<std::ptrdiff_t>(p));
                    const double gain = base - evaluate(t, in.net, cfg).total;
                    best = std::max(best, gain);
                    if (cur.routes[r].tasks[p].link == picked.link) {
                        chosen = gain;
                        cr = r;
                        cp = p;
                    }
                }
            }
            ASSERT_NEAR(chosen, best, 1e-9);
            remove_task(cur, cr, cp, in.net, cfg);
        }
        EXPECT_EQ(fingerprint(cur), fingerprint(rr.partial));
    }
}

TEST(DestroyNonAdjacent, ZeroGapTaskStays) {
    // 1-2-3 served without gaps; 5-6 needs a 400 m approach
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 3, 5, 6}, {1},
        {edge(1, 1, 2, 100.0), edge(2, 2, 3, 100.0), edge(3, 3, 5, 400.0, false), edge(4, 5, 6, 100.0),
         edge(5, 6, 1, 100.0, false)}));
    const SolverConfig cfg = loose();
    auto t = [&](std::int64_t ext) { return ServiceTask{net.link_of(ext), Direction::Forward}; };
    const Solution s = fixed_solution({fixed_route(0, net.node_of(1), {t(1), t(2), t(4)}, cfg)}, net, cfg);
    const RemovalResult rr = destroy_non_adjacent(s, 0.1, net, cfg);
    ASSERT_EQ(rr.removed.size(), 1U);
    EXPECT_NE(rr.removed[0].link, net.link_of(1));
}

TEST(DestroyNonAdjacent, OffCorridorRankedFirst) {
    // A(1) - B(3) corridor; x sits 3 km off it at 7-8
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 3, 7, 8}, {1},
        {edge(1, 1, 2, 100.0), edge(2, 2, 3, 100.0), edge(3, 2, 7, 3000.0, false), edge(4, 7, 8, 50.0),
         edge(5, 8, 2, 3000.0, false), edge(6, 3, 1, 200.0, false)}));
    const SolverConfig cfg = loose();
    auto t = [&](std::int64_t ext) { return ServiceTask{net.link_of(ext), Direction::Forward}; };
    const Solution s = fixed_solution({fixed_route(0, net.node_of(1), {t(1), t(4), t(2)}, cfg)}, net, cfg);
    const RemovalResult rr = destroy_non_adjacent(s, 0.1, net, cfg);
    ASSERT_EQ(rr.removed.size(), 1U);
    EXPECT_EQ(rr.removed[0].link, net.link_of(4));
}

namespace {

// Removed set must dominate the survivors on the given score.
template <typename Score>
void expect_top_k(const Solution& s, const RemovalResult& rr, Score score) {
    std::set<LinkId> removed;
    for (const ServiceTask& t : rr.removed) removed.insert(t.link);
    double min_removed = kInfinity, max_kept = -kInfinity;
    for (std::size_t r = 0; r < s.routes.size(); ++r) {
        for (std::size_t p = 0; p < s.routes[r].tasks.size(); ++p) {
            const double v = score(r, p);
            if (removed.count(s.routes[r].tasks[p].link) != 0) {
                min_removed = std::min(min_removed, v);
            } else {
                max_kept = std::max(max_kept, v);
            }
        }
    }
    EXPECT_GE(min_removed, max_kept);
}

} // namespace

TEST(DestroyNonAdjacent, MatchesFullSort) {
    Rng rng(12);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 30; ++trial) {
        const Instance in = grid(6, 6, 100.0, 0.7, 0.5, 2, 80 + trial);
        const Solution s = scrambled(in, 3, cfg, rng);
        const RemovalResult rr = destroy_non_adjacent(s, 0.2, in.net, cfg);
        EXPECT_EQ(rr.removed.size(), removal_count(0.2, s.task_count()));
        expect_top_k(s, rr, [&](std::size_t r, std::size_t p) {
            const Route& route = s.routes[r];
            const Link& l = in.net.link(route.tasks[p].link);
            const bool fwd = route.tasks[p].dir == Direction::Forward;
            NodeId prev = route.anchor;
            if (p > 0) {
                const ServiceTask& q = route.tasks[p - 1];
                prev = q.dir == Direction::Forward ? in.net.link(q.link).to : in.net.link(q.link).from;
            }
            NodeId next = route.depot;
            if (p + 1 < route.tasks.size()) {
                const ServiceTask& q = route.tasks[p + 1];
                next = q.dir == Direction::Forward ? in.net.link(q.link).from : in.net.link(q.link).to;
            }
            return in.net.dist(prev, fwd ? l.from : l.to) + in.net.dist(fwd ? l.to : l.from, next);
        });
    }
}

TEST(DestroyFarthestDepot, SingleTask) {
    const MixedNetwork net = two_node();
    const SolverConfig cfg;
    const Solution s = fixed_solution({fixed_route(0, 0, {{0, Direction::Forward}}, cfg)}, net, cfg);
    const RemovalResult rr = destroy_farthest_depot(s, 0.1, net, cfg);
    ASSERT_EQ(rr.removed.size(), 1U);
    EXPECT_EQ(rr.partial.task_count(), 0U);
}

TEST(DestroyFarthestDepot, WrongDepotTaskGoesFirst) {
    // depots 1 and 20; route of depot 1 also serves a link next to depot 20
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 19, 20}, {1, 20},
        {edge(1, 1, 2, 100.0), edge(2, 2, 19, 4000.0, false), edge(3, 19, 20, 100.0), edge(4, 1, 2, 80.0)}));
    const SolverConfig cfg = loose();
    auto t = [&](std::int64_t ext) { return ServiceTask{net.link_of(ext), Direction::Forward}; };
    const Solution s = fixed_solution({fixed_route(0, net.node_of(1), {t(1), t(3), t(4)}, cfg)}, net, cfg);
    const RemovalResult rr = destroy_farthest_depot(s, 0.1, net, cfg);
    ASSERT_EQ(rr.removed.size(), 1U);
    EXPECT_EQ(rr.removed[0].link, net.link_of(3));
}

TEST(DestroyFarthestDepot, MatchesFullSort) {
    Rng rng(13);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 30; ++trial) {
        const Instance in = grid(6, 6, 100.0, 0.7, 0.5, 1 + trial % 4, 120 + trial);
        const Solution s = scrambled(in, 4, cfg, rng);
        const RemovalResult rr = destroy_farthest_depot(s, 0.2, in.net, cfg);
        expect_top_k(s, rr, [&](std::size_t r, std::size_t p) {
            const Link& l = in.net.link(s.routes[r].tasks[p].link);
            const NodeId d = s.routes[r].depot;
            double v = std::min(in.net.dist(d, l.from), in.net.dist(l.to, d));
            if (l.kind == LinkKind::NonDirectionalEdge) v = std::min({v, in.net.dist(d, l.to), in.net.dist(l.from, d)});
            return v;
        });
    }
}

TEST(DestroyTimeRelated, FixedStageIsRandom) {
    const Instance in = grid(6, 6, 100.0, 0.8, 0.3, 2, 7);
    const SolverConfig cfg;
    Rng rng(1);
    const Solution s = scrambled(in, 3, cfg, rng);
    Rng a(5), b(5);
    const RemovalResult x = destroy_time_related(s, 0.1, in.net, cfg, a);
    const RemovalResult y = destroy_random(s, 0.1, in.net, cfg, b);
    EXPECT_EQ(x.removed, y.removed);
    EXPECT_EQ(fingerprint(x.partial), fingerprint(y.partial));
}

namespace {

// 50 tasks on one route; the listed positions get an already-closed window.
Solution late_plan(const Instance& in, const std::vector<std::size_t>& late, const SolverConfig& cfg) {
    Solution s;
    s.stage = Stage::Replan;
    Route r = fixed_route(0, in.net.depots()[0], {}, cfg);
    for (std::size_t i = 0; i < 50; ++i) r.tasks.push_back({in.demands[i], Direction::Forward});
    s.routes.push_back(r);
    for (std::size_t p : late) s.set_window(in.demands[p], {-100.0, -50.0}, in.net.link_count());
    refresh(s, in.net, cfg);
    return s;
}

} // namespace

TEST(DestroyTimeRelated, PadsFewLateTasksWithRandomOnes) {
    const Instance in = grid(7, 7, 100.0, 1.0, 0.0, 1, 1);
    const SolverConfig cfg;
    const Solution s = late_plan(in, {4, 20, 33}, cfg);
    Rng rng(3);
    const RemovalResult rr = destroy_time_related(s, 0.1, in.net, cfg, rng);
    ASSERT_EQ(rr.removed.size(), 5U);
    const auto ids = sorted(rr.removed);
    for (std::size_t p : {4, 20, 33}) EXPECT_TRUE(std::binary_search(ids.begin(), ids.end(), in.demands[p]));
}

TEST(DestroyTimeRelated, KeepsTheLatestWhenTooMany) {
    const Instance in = grid(7, 7, 100.0, 1.0, 0.0, 1, 1);
    const SolverConfig cfg;
    // later positions start later, so they carry larger penalties
    const std::vector<std::size_t> late = {2, 9, 15, 22, 30, 41, 47};
    const Solution s = late_plan(in, late, cfg);
    Rng rng(3);
    const RemovalResult rr = destroy_time_related(s, 0.1, in.net, cfg, rng);
    std::vector<std::pair<double, LinkId>> pen;
    for (std::size_t p : late) {
        pen.push_back({lateness_penalty(s.routes[0].start_times[p], *s.window(in.demands[p]), cfg), in.demands[p]});
    }
    std::sort(pen.rbegin(), pen.rend());
    std::vector<LinkId> expect;
    for (std::size_t i = 0; i < 5; ++i) expect.push_back(pen[i].second);
    std::sort(expect.begin(), expect.end());
    EXPECT_EQ(sorted(rr.removed), expect);
}

// ---------------------------------------------------------------------------
// repair

TEST(RepairGreedy, RefillsTheUniqueHole) {
    // ring 1-2-3-4-1 served without deadhead
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 3, 4}, {1}, {edge(1, 1, 2, 100.0), edge(2, 2, 3, 100.0), edge(3, 3, 4, 100.0), edge(4, 4, 1, 100.0)}));
    const SolverConfig cfg = loose();
    const Solution s = fixed_solution(
        {fixed_route(0, 0, {{0, Direction::Forward}, {1, Direction::Forward}, {2, Direction::Forward}, {3, Direction::Forward}}, cfg)},
        net, cfg);
    for (std::size_t p = 0; p < 4; ++p) {
        RemovalResult rr;
        rr.partial = s;
        rr.removed = {remove_task(rr.partial, 0, p, net, cfg)};
        rr.removed[0].dir = Direction::Forward;
        const Solution out = repair_greedy(rr, net, cfg);
        EXPECT_EQ(evaluate(out, net, cfg).total, 400.0);
        EXPECT_EQ(out.routes[0].tasks, s.routes[0].tasks);
    }
}

TEST(RepairGreedy, StepsMatchExhaustiveScan) {
    Rng rng(21);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 25; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.7, 0.4, 2, 200 + trial);
        const Solution s = open_plan(in, 2 + trial % 2, cfg, rng);
        const RemovalResult rr = destroy_random(s, 0.25, in.net, cfg, rng);
        // reference: globally cheapest (link, route, pos, dir) by full recompute
        Solution ref = rr.partial;
        std::vector<LinkId> pending = sorted(rr.removed);
        while (!pending.empty()) {
            std::optional<Slot> best;
            std::size_t bi = 0;
            for (std::size_t i = 0; i < pending.size(); ++i) {
                for (const Slot& sl : all_slots(ref, pending[i], in.net, cfg)) {
                    if (!best || sl.cost < best->cost) {
                        best = sl;
                        bi = i;
                    }
                }
            }
            put(ref, *best, in.net, cfg);
            pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(bi));
        }
        const Solution out = repair_greedy(rr, in.net, cfg);
        EXPECT_EQ(fingerprint(out), fingerprint(ref)) << "trial " << trial;
    }
}

TEST(RepairGreedy, NoWorseThanRandomOrderInsertion) {
    Rng rng(31);
    const SolverConfig cfg = loose();
    int wins = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Instance in = grid(4, 5, 100.0, 0.7, 0.3, 1 + trial % 2, 400 + trial);
        const Solution s = open_plan(in, 2, cfg, rng);
        const RemovalResult rr = destroy_random(s, 0.3, in.net, cfg, rng);
        Solution base = rr.partial;
        std::vector<LinkId> order = sorted(rr.removed);
        rng.shuffle(order);
        for (LinkId id : order) {
            const auto slots = all_slots(base, id, in.net, cfg);
            put(base, *std::min_element(slots.begin(), slots.end(),
                                        [](const Slot& a, const Slot& b) { return a.cost < b.cost; }),
                in.net, cfg);
        }
        const double greedy = evaluate(repair_greedy(rr, in.net, cfg), in.net, cfg).total;
        const double baseline = evaluate(base, in.net, cfg).total;
        wins += greedy <= baseline + 1e-9;
    }
    // cheapest-first is a heuristic; it must not lose to a random order often
    EXPECT_GE(wins, 45);
}

TEST(RepairRegret, SingleTaskEqualsGreedy) {
    Rng rng(22);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 20; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.7, 0.4, 2, 300 + trial);
        const Solution s = open_plan(in, 3, cfg, rng);
        const RemovalResult rr = destroy_random(s, 0.01, in.net, cfg, rng);
        ASSERT_EQ(rr.removed.size(), 1U);
        EXPECT_EQ(fingerprint(repair_regret2(rr, in.net, cfg)), fingerprint(repair_greedy(rr, in.net, cfg)));
    }
}

TEST(RepairRegret, AvoidsTheBlockingTrap) {
    const MixedNetwork net = blocking_line();
    const SolverConfig cfg = loose();
    const Solution s = blocking_start(net, cfg);
    const RemovalResult rr{s, {{net.link_of(2), Direction::Forward}, {net.link_of(5), Direction::Forward}}};
    const double greedy = evaluate(repair_greedy(rr, net, cfg), net, cfg).total;
    const double regret = evaluate(repair_regret2(rr, net, cfg), net, cfg).total;
    EXPECT_EQ(greedy, 40.0 + 280.0);
    EXPECT_EQ(regret, 80.0 + 180.0);
    EXPECT_LT(regret, greedy);
}

TEST(RepairRegret, RoundsMatchExhaustiveScan) {
    Rng rng(23);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 25; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.7, 0.4, 2, 500 + trial);
        const Solution s = open_plan(in, 2 + trial % 2, cfg, rng);
        const RemovalResult rr = destroy_random(s, 0.25, in.net, cfg, rng);
        Solution ref = rr.partial;
        std::vector<LinkId> pending = sorted(rr.removed);
        while (!pending.empty()) {
            double best_regret = -kInfinity;
            Slot pick{};
            std::size_t pi = 0;
            for (std::size_t i = 0; i < pending.size(); ++i) {
                // cheapest orientation per (route, pos) slot
                std::vector<Slot> per_slot;
                for (const Slot& sl : all_slots(ref, pending[i], in.net, cfg)) {
                    if (!per_slot.empty() && per_slot.back().route == sl.route && per_slot.back().pos == sl.pos) {
                        if (sl.cost < per_slot.back().cost) per_slot.back() = sl;
                    } else {
                        per_slot.push_back(sl);
                    }
                }
                ASSERT_FALSE(per_slot.empty());
                std::size_t b = 0;
                for (std::size_t k = 1; k < per_slot.size(); ++k) {
                    if (per_slot[k].cost < per_slot[b].cost) b = k;
                }
                double second = kInfinity;
                for (std::size_t k = 0; k < per_slot.size(); ++k) {
                    if (k != b) second = std::min(second, per_slot[k].cost);
                }
                const double regret = second == kInfinity ? kInfinity : second - per_slot[b].cost;
                if (regret > best_regret) {
                    best_regret = regret;
                    pick = per_slot[b];
                    pi = i;
                }
            }
            put(ref, pick, in.net, cfg);
            pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pi));
        }
        EXPECT_EQ(fingerprint(repair_regret2(rr, in.net, cfg)), fingerprint(ref)) << "trial " << trial;
    }
}

TEST(NoiseTerm, Formula) {
    Rng rng(1);
    EXPECT_EQ(noise_term(0.1, 3000.0, 3000.0, 2000.0, rng), 0.0);
    EXPECT_EQ(noise_term(0.0, 10.0, 3000.0, 2000.0, rng), 0.0);
    EXPECT_EQ(noise_value(0.1, 1500.0, 3000.0, 1.0, 2000.0), 100.0);
    EXPECT_EQ(noise_value(0.1, 1500.0, 3000.0, 0.0, 2000.0), 0.0);
    Rng a(9), b(9);
    const double z = b.uniform_closed();
    EXPECT_EQ(noise_term(0.1, 1500.0, 3000.0, 2000.0, a), 0.1 * 0.5 * z * 2000.0);
}

TEST(NoiseTerm, BoundedAndCentred) {
    Rng rng(77);
    const double mu = 0.1, iter = 1000.0, all = 3000.0, dmax = 2000.0;
    const double phi = 1.0 - iter / all;
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double v = noise_term(mu, iter, all, dmax, rng);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, mu * phi * dmax);
        sum += v;
    }
    EXPECT_NEAR(sum / n, mu * phi * dmax / 2.0, 0.02 * mu * phi * dmax / 2.0);
}

TEST(RepairNoise, ZeroNoiseIsExact) {
    Rng rng(24);
    SolverConfig cfg = loose();
    for (int trial = 0; trial < 10; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.7, 0.4, 2, 600 + trial);
        const Solution s = open_plan(in, 3, cfg, rng);
        const RemovalResult rr = destroy_random(s, 0.3, in.net, cfg, rng);
        const auto g = fingerprint(repair_greedy(rr, in.net, cfg));
        const auto r = fingerprint(repair_regret2(rr, in.net, cfg));
        Rng n1(1), n2(1), n3(1), n4(1);
        cfg.noise_scale = 0.1;
        EXPECT_EQ(fingerprint(repair_noise_greedy(rr, in.net, cfg, 3000.0, 3000.0, n1)), g);
        EXPECT_EQ(fingerprint(repair_noise_regret(rr, in.net, cfg, 3000.0, 3000.0, n2)), r);
        cfg.noise_scale = 0.0;
        EXPECT_EQ(fingerprint(repair_noise_greedy(rr, in.net, cfg, 10.0, 3000.0, n3)), g);
        EXPECT_EQ(fingerprint(repair_noise_regret(rr, in.net, cfg, 10.0, 3000.0, n4)), r);
        cfg.noise_scale = 0.1;
    }
}

TEST(RepairNoise, SameSeedSameResult) {
    Rng rng(25);
    const SolverConfig cfg = loose();
    const Instance in = grid(6, 6, 100.0, 0.7, 0.4, 2, 9);
    const Solution s = open_plan(in, 3, cfg, rng);
    const RemovalResult rr = destroy_random(s, 0.3, in.net, cfg, rng);
    Rng a(4), b(4);
    EXPECT_EQ(fingerprint(repair_noise_greedy(rr, in.net, cfg, 10.0, 3000.0, a)),
              fingerprint(repair_noise_greedy(rr, in.net, cfg, 10.0, 3000.0, b)));
}

TEST(RepairTimeWindow, OpenWindowsFollowCheapestSlotInDeadlineOrder) {
    Rng rng(26);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 15; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.7, 0.4, 2, 700 + trial);
        Solution s = open_plan(in, 2, cfg, rng);
        RemovalResult rr = destroy_random(s, 0.25, in.net, cfg, rng);
        for (const ServiceTask& t : rr.removed) rr.partial.set_window(t.link, {0.0, kInfinity}, in.net.link_count());
        refresh(rr.partial, in.net, cfg);
        Solution ref = rr.partial;
        for (LinkId id : sorted(rr.removed)) {
            const auto slots = all_slots(ref, id, in.net, cfg);
            const Slot* best = &slots.front();
            for (const Slot& sl : slots) {
                if (sl.cost < best->cost) best = &sl;
            }
            put(ref, *best, in.net, cfg);
        }
        EXPECT_EQ(fingerprint(repair_time_window(rr, in.net, cfg)), fingerprint(ref));
    }
}

TEST(RepairTimeWindow, TightWindowLandsEarly) {
    // line 1-2-3-4-5 with depots at both ends; W = 1-2 must start by 0.5 min,
    // which only the front of the route leaving 1 achieves
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 3, 4, 5}, {1, 5},
        {edge(1, 1, 2, 100.0), edge(2, 2, 3, 100.0), edge(3, 3, 4, 100.0), edge(4, 4, 5, 100.0)}));
    const SolverConfig cfg = loose();
    auto t = [&](std::int64_t ext, Direction d) { return ServiceTask{net.link_of(ext), d}; };
    Solution s;
    s.stage = Stage::Replan;
    s.routes.push_back(fixed_route(0, net.node_of(1), {t(3, Direction::Reverse), t(2, Direction::Reverse)}, cfg));
    s.routes.push_back(fixed_route(1, net.node_of(5), {t(4, Direction::Reverse)}, cfg));
    s.set_window(net.link_of(1), {0.0, 0.5}, net.link_count());
    refresh(s, net, cfg);
    const RemovalResult rr{s, {t(1, Direction::Forward)}};
    const Solution out = repair_time_window(rr, net, cfg);
    ASSERT_EQ(out.routes[0].tasks.size(), 3U);
    EXPECT_EQ(out.routes[0].tasks.front(), t(1, Direction::Forward));
    EXPECT_EQ(out.routes[1].tasks, s.routes[1].tasks);
    EXPECT_EQ(evaluate(out, net, cfg).window_penalty, 0.0);
}

TEST(RepairTimeWindow, InWindowSlotMeansNoPenalty) {
    Rng rng(27);
    const SolverConfig cfg = loose();
    for (int trial = 0; trial < 20; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.7, 0.4, 2, 800 + trial);
        Solution s = open_plan(in, 2, cfg, rng);
        // a single hole, so nothing else shifts the windowed task afterwards
        RemovalResult rr;
        rr.partial = s;
        const std::size_t r0 = rng.below(s.routes.size());
        if (s.routes[r0].tasks.empty()) continue;
        rr.removed = {remove_task(rr.partial, r0, rng.below(s.routes[r0].tasks.size()), in.net, cfg)};
        const LinkId w = rr.removed.front().link;
        // window around a start time some slot can actually reach
        const auto slots = all_slots(rr.partial, w, in.net, cfg);
        Solution probe = rr.partial;
        put(probe, slots[rng.below(slots.size())], in.net, cfg);
        double start = 0.0;
        for (const Route& r : probe.routes) {
            for (std::size_t p = 0; p < r.tasks.size(); ++p) {
                if (r.tasks[p].link == w) start = r.start_times[p];
            }
        }
        rr.partial.set_window(w, {start - 0.25, start + 0.25}, in.net.link_count());
        refresh(rr.partial, in.net, cfg);
        const Solution out = repair_time_window(rr, in.net, cfg);
        for (const Route& r : out.routes) {
            for (std::size_t p = 0; p < r.tasks.size(); ++p) {
                if (r.tasks[p].link != w) continue;
                EXPECT_GE(r.start_times[p], start - 0.25 - 1e-6);
                EXPECT_LE(r.start_times[p], start + 0.25 + 1e-6);
                EXPECT_EQ(r.penalty, 0.0);
            }
        }
    }
}

TEST(ReoptimizeDepots, OptimalStaysPut) {
    const Instance in = grid(6, 6, 200.0, 0.7, 0.3, 3, 4);
    const SolverConfig cfg;
    Rng rng(2);
    const Solution s = reoptimize_depots(initial_solution(in.net, in.demands, cfg, rng), in.net, cfg);
    EXPECT_EQ(fingerprint(reoptimize_depots(s, in.net, cfg)), fingerprint(s));
}

TEST(ReoptimizeDepots, MigratedRouteFlips) {
    // depots 1 and 20; a route anchored at 1 serves only links next to 20
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 19, 20}, {1, 20},
        {edge(1, 1, 2, 100.0), edge(2, 2, 19, 4000.0, false), edge(3, 19, 20, 100.0), edge(4, 20, 19, 120.0)}));
    const SolverConfig cfg;
    auto t = [&](std::int64_t ext) { return ServiceTask{net.link_of(ext), Direction::Forward}; };
    const Solution s = fixed_solution({fixed_route(0, net.node_of(1), {t(3), t(4)}, cfg)}, net, cfg);
    const Solution out = reoptimize_depots(s, net, cfg);
    EXPECT_EQ(out.routes[0].depot, net.node_of(20));
    EXPECT_LT(evaluate(out, net, cfg).total, evaluate(s, net, cfg).total);
}

TEST(ReoptimizeDepots, NeverWorse) {
    Rng rng(28);
    const SolverConfig cfg;
    for (int trial = 0; trial < 30; ++trial) {
        const Instance in = grid(5, 5, 100.0, 0.7, 0.4, 1 + trial % 4, 900 + trial);
        const Solution s = scrambled(in, 3, cfg, rng);
        const Solution out = reoptimize_depots(s, in.net, cfg);
        EXPECT_LE(evaluate(out, in.net, cfg).total, evaluate(s, in.net, cfg).total + 1e-9);
        EXPECT_LE(search_objective(out, cfg), search_objective(s, cfg) + 1e-9);
    }
}

TEST(ReoptimizeDepots, KeepsALongerRotationThatEvensTheSpread) {
    // 6000 m grid: the shortest rotation of one route would open a 24 min gap
    const GridInstance g = generate_grid_instance(3, 3, 6000.0, 0.8, 0.4, 1, 106);
    const MixedNetwork net = build_network(g.spec);
    const std::vector<LinkId> all = demand_ids(g, net);
    const SolverConfig cfg;
    Solution s = brute_force_optimum(net, {all.begin(), all.begin() + 4}, 2, cfg).solution;
    refresh(s, net, cfg);
    ASSERT_LE(work_spread(s), cfg.max_work_spread);
    EXPECT_EQ(fingerprint(reoptimize_depots(s, net, cfg)), fingerprint(s));
}

TEST(CandidateRoutes, InfiniteRatioKeepsAll) {
    const Instance in = grid(6, 6, 100.0, 0.7, 0.3, 2, 4);
    const SolverConfig cfg;
    Rng rng(1);
    const Solution s = scrambled(in, 4, cfg, rng);
    const auto all = candidate_routes(in.demands.front(), s, in.net, kInfinity);
    EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(CandidateRoutes, FarDepotFilteredOut) {
    // task at depot A (1); depot B (30) ten times farther
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 30}, {1, 30}, {edge(1, 1, 2, 100.0), edge(2, 2, 30, 1000.0, false), edge(3, 30, 1, 1100.0, false)}));
    const SolverConfig cfg;
    const Solution s = fixed_solution({fixed_route(0, net.node_of(1), {}, cfg), fixed_route(1, net.node_of(30), {}, cfg),
                                       fixed_route(2, net.node_of(1), {}, cfg)},
                                      net, cfg);
    EXPECT_EQ(candidate_routes(net.link_of(1), s, net, 2.0), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(candidate_routes(net.link_of(1), s, net, kInfinity).size(), 3U);
}

TEST(CandidateRoutes, SingleDepotKeepsAll) {
    const Instance in = grid(6, 6, 100.0, 0.7, 0.3, 1, 4);
    const SolverConfig cfg;
    Rng rng(1);
    const Solution s = scrambled(in, 3, cfg, rng);
    for (LinkId id : in.demands) EXPECT_EQ(candidate_routes(id, s, in.net, 1.0).size(), 3U);
}

TEST(CandidateRoutes, ReplanUsesAnchors) {
    const MixedNetwork net = build_network(spec_of(
        {1, 2, 30}, {1, 30}, {edge(1, 1, 2, 100.0), edge(2, 2, 30, 1000.0, false), edge(3, 30, 1, 1100.0, false)}));
    const SolverConfig cfg;
    Solution s = fixed_solution({fixed_route(0, net.node_of(1), {}, cfg), fixed_route(1, net.node_of(1), {}, cfg)}, net, cfg);
    s.stage = Stage::Replan;
    s.routes[1].anchor = net.node_of(30); // vehicle 1 is far away now
    refresh(s, net, cfg);
    EXPECT_EQ(candidate_routes(net.link_of(1), s, net, 2.0), (std::vector<std::size_t>{0}));
}

TEST(Tabu, RecordThenVeto) {
    TabuList list(10);
    const std::size_t det = OperatorPair{DestroyOp::Worst, RepairOp::Greedy}.id();
    const std::size_t sto = OperatorPair{DestroyOp::Random, RepairOp::NoiseGreedy}.id();
    EXPECT_FALSE(tabu_check(list, {42, det}));
    tabu_record(list, {42, det});
    EXPECT_TRUE(tabu_check(list, {42, det}));
    EXPECT_FALSE(tabu_check(list, {43, det}));
    tabu_record(list, {42, sto});
    EXPECT_FALSE(tabu_check(list, {42, sto}));
    EXPECT_EQ(list.size(), 1U);
}

TEST(Tabu, DeterministicPairs) {
    std::size_t n = 0;
    for (std::size_t id = 0; id < kPairCount; ++id) n += is_deterministic(OperatorPair::from_id(id));
    EXPECT_EQ(n, 4U * 3U);
    EXPECT_FALSE(is_deterministic({DestroyOp::Random, RepairOp::Greedy}));
    EXPECT_FALSE(is_deterministic({DestroyOp::Worst, RepairOp::NoiseRegret}));
    EXPECT_TRUE(is_deterministic({DestroyOp::TimeRelated, RepairOp::TimeWindow}));
}

TEST(Tabu, BoundedFifo) {
    TabuList list(3);
    const std::size_t det = OperatorPair{DestroyOp::Worst, RepairOp::Regret2}.id();
    for (std::uint64_t fp = 1; fp <= 5; ++fp) tabu_record(list, {fp, det});
    EXPECT_EQ(list.size(), 3U);
    EXPECT_FALSE(tabu_check(list, {1, det}));
    EXPECT_FALSE(tabu_check(list, {2, det}));
    EXPECT_TRUE(tabu_check(list, {5, det}));
}

// ---------------------------------------------------------------------------
// invariants over every destroy x repair composition

TEST(Operators, CompositionsPreserveCoverageAndCapacity) {
    Rng rng(99);
    SolverConfig cfg;
    cfg.capacity = 3000.0;
    for (int trial = 0; trial < 6; ++trial) {
        const Instance in = grid(6, 6, 100.0, 0.7, 0.5, 2, 1000 + trial);
        Rng crng(static_cast<std::uint64_t>(trial));
        Solution s = initial_solution(in.net, in.demands, cfg, crng);
        if (trial % 2 == 1) make_replan(s, in, cfg, rng);
        for (Route& r : s.routes) r.capacity = cfg.capacity;
        refresh(s, in.net, cfg);
        for (std::size_t id = 0; id < kPairCount; ++id) {
            const Solution out = apply_pair(s, OperatorPair::from_id(id), 10, in.net, cfg, rng);
            ASSERT_EQ(covered(out), covered(s)) << "pair " << id;
            for (const Route& r : out.routes) {
                EXPECT_LE(r.load, r.capacity + 1e-6);
                for (const ServiceTask& t : r.tasks) {
                    if (in.net.link(t.link).kind == LinkKind::DirectionalArc) EXPECT_EQ(t.dir, Direction::Forward);
                }
            }
            const auto report = check_feasibility(out, in.net, cfg, covered(s));
            EXPECT_FALSE(has_violation(report, ViolationKind::DuplicateService));
            EXPECT_FALSE(has_violation(report, ViolationKind::WrongDirection));
            EXPECT_FALSE(has_violation(report, ViolationKind::MissingDemand));
        }
    }
}

TEST(Operators, ExactRepairsArePure) {
    Rng rng(100);
    const SolverConfig cfg = loose();
    const Instance in = grid(6, 6, 100.0, 0.7, 0.5, 2, 55);
    const Solution s = open_plan(in, 3, cfg, rng);
    const RemovalResult rr = destroy_random(s, 0.3, in.net, cfg, rng);
    EXPECT_EQ(fingerprint(repair_greedy(rr, in.net, cfg)), fingerprint(repair_greedy(rr, in.net, cfg)));
    EXPECT_EQ(fingerprint(repair_regret2(rr, in.net, cfg)), fingerprint(repair_regret2(rr, in.net, cfg)));
}

TEST(Operators, NoRouteFitsThrows) {
    const MixedNetwork net = blocking_line();
    const SolverConfig cfg = loose();
    Solution s = blocking_start(net, cfg);
    s.routes[1].capacity = 0.0;
    const RemovalResult rr{s, {{net.link_of(2), Direction::Forward}, {net.link_of(5), Direction::Forward}}};
    try {
        repair_greedy(rr, net, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoFeasibleInsertion);
    }
}

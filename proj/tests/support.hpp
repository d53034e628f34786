#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "dxcarp/dxcarp.hpp"

namespace dxt {

using namespace dxcarp;

struct Instance {
    MixedNetwork net;
    std::vector<LinkId> demands;
};

inline Instance grid(int rows, int cols, double edge_len, double demand_frac, double arc_frac, int depots,
                     std::uint64_t seed) {
    const GridInstance g = generate_grid_instance(rows, cols, edge_len, demand_frac, arc_frac, depots, seed);
    Instance out{build_network(g.spec), {}};
    out.demands = demand_ids(g, out.net);
    return out;
}

inline LinkSpec arc(std::int64_t id, std::int64_t from, std::int64_t to, double len, bool demand = true) {
    return {id, from, to, len, LinkKind::DirectionalArc, demand};
}

inline LinkSpec edge(std::int64_t id, std::int64_t from, std::int64_t to, double len, bool demand = true) {
    return {id, from, to, len, LinkKind::NonDirectionalEdge, demand};
}

inline NetworkSpec spec_of(std::vector<std::int64_t> nodes, std::vector<std::int64_t> depots,
                           std::vector<LinkSpec> links) {
    NetworkSpec s;
    for (std::int64_t n : nodes) s.nodes.push_back({n, std::nullopt, std::nullopt});
    s.depots = std::move(depots);
    s.links = std::move(links);
    return s;
}

// Depot 1, demand arc 1->2 of 100 m, parallel non-demand edge for the way back.
inline MixedNetwork two_node() {
    return build_network(spec_of({1, 2}, {1}, {arc(1, 1, 2, 100.0), edge(2, 1, 2, 100.0, false)}));
}

inline Route fixed_route(std::size_t vehicle, NodeId depot, std::vector<ServiceTask> tasks, const SolverConfig& cfg) {
    Route r;
    r.vehicle = vehicle;
    r.depot = r.anchor = depot;
    r.capacity = cfg.capacity;
    r.tasks = std::move(tasks);
    return r;
}

inline Solution fixed_solution(std::vector<Route> routes, const MixedNetwork& net, const SolverConfig& cfg) {
    Solution s;
    s.stage = Stage::Fixed;
    s.routes = std::move(routes);
    refresh(s, net, cfg);
    return s;
}

// Random connected mixed graph with integer lengths: a spanning tree of edges
// plus extra arcs and edges. Nodes are 1..n.
inline NetworkSpec random_graph(std::size_t n, std::size_t extra, Rng& rng, int max_len = 100) {
    NetworkSpec s;
    for (std::size_t i = 1; i <= n; ++i) s.nodes.push_back({static_cast<std::int64_t>(i), std::nullopt, std::nullopt});
    s.depots = {1};
    std::int64_t id = 1;
    auto len = [&] { return static_cast<double>(1 + rng.below(static_cast<std::size_t>(max_len))); };
    for (std::size_t i = 2; i <= n; ++i) {
        const auto parent = static_cast<std::int64_t>(1 + rng.below(i - 1));
        s.links.push_back(edge(id++, parent, static_cast<std::int64_t>(i), len(), rng.coin()));
    }
    for (std::size_t k = 0; k < extra; ++k) {
        const auto a = static_cast<std::int64_t>(1 + rng.below(n));
        const auto b = static_cast<std::int64_t>(1 + rng.below(n));
        if (rng.coin()) {
            s.links.push_back(arc(id++, a, b, len(), rng.coin()));
        } else {
            s.links.push_back(edge(id++, a, b, len(), rng.coin()));
        }
    }
    s.links.front().is_demand = true;
    return s;
}

// Textbook Dijkstra over the raw link list, one source at a time.
inline std::vector<std::vector<double>> dijkstra_all(const MixedNetwork& net) {
    const std::size_t n = net.node_count();
    std::vector<std::vector<std::pair<NodeId, double>>> adj(n);
    for (const Link& l : net.links()) {
        if (l.kind == LinkKind::VirtualDepot) continue;
        adj[l.from].push_back({l.to, l.length});
        if (l.kind == LinkKind::NonDirectionalEdge) adj[l.to].push_back({l.from, l.length});
    }
    std::vector<std::vector<double>> out(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
    for (std::size_t s = 0; s < n; ++s) {
        auto& d = out[s];
        using Item = std::pair<double, NodeId>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
        d[s] = 0.0;
        q.push({0.0, static_cast<NodeId>(s)});
        while (!q.empty()) {
            const auto [du, u] = q.top();
            q.pop();
            if (du > d[u]) continue;
            for (const auto& [v, w] : adj[u]) {
                if (du + w < d[v]) {
                    d[v] = du + w;
                    q.push({d[v], v});
                }
            }
        }
    }
    return out;
}

// Route length recomputed by walking the task list.
inline double walk_route(const Route& r, const MixedNetwork& net, bool closed) {
    double d = 0.0;
    NodeId at = r.anchor;
    for (const ServiceTask& t : r.tasks) {
        const Link& l = net.link(t.link);
        const NodeId head = t.dir == Direction::Forward ? l.from : l.to;
        d += net.dist(at, head) + l.length;
        at = t.dir == Direction::Forward ? l.to : l.from;
    }
    if (closed) d += net.dist(at, r.depot);
    return d;
}

// Random solution over every demand link of an instance; each task in a
// random route at a random position with a random legal direction.
inline Solution scrambled(const Instance& in, std::size_t m, const SolverConfig& cfg, Rng& rng) {
    std::vector<Route> routes;
    for (std::size_t k = 0; k < m; ++k) {
        routes.push_back(fixed_route(k, in.net.depots()[k % in.net.depots().size()], {}, cfg));
    }
    for (LinkId id : in.demands) {
        Route& r = routes[rng.below(m)];
        const auto dirs = allowed_directions(in.net, id);
        r.tasks.insert(r.tasks.begin() + static_cast<std::ptrdiff_t>(rng.below(r.tasks.size() + 1)),
                       ServiceTask{id, dirs[rng.below(dirs.size())]});
    }
    return fixed_solution(std::move(routes), in.net, cfg);
}

// Turns a fixed solution into a mid-operation one: anchors moved, clocks and
// budgets set, a few links windowed.
inline void make_replan(Solution& s, const Instance& in, const SolverConfig& cfg, Rng& rng) {
    s.stage = Stage::Replan;
    for (Route& r : s.routes) {
        r.anchor = static_cast<NodeId>(rng.below(in.net.node_count()));
        r.start_time = 20.0 + 10.0 * rng.uniform();
        r.prior_work = 5.0 * rng.uniform();
        r.capacity = 1e9;
    }
    for (LinkId id : in.demands) {
        if (rng.uniform() < 0.4) {
            const double open = 20.0 + 10.0 * rng.uniform();
            s.set_window(id, {open, open + 2.0 + 5.0 * rng.uniform()}, in.net.link_count());
        }
    }
    refresh(s, in.net, cfg);
}

inline std::vector<LinkId> covered(const Solution& s) {
    std::vector<LinkId> out;
    for (const Route& r : s.routes) {
        for (const ServiceTask& t : r.tasks) out.push_back(t.link);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline SolverConfig short_run(int iterations, std::uint64_t seed = 1) {
    SolverConfig cfg;
    cfg.max_iterations = iterations;
    cfg.seed = seed;
    return cfg;
}

} // namespace dxt

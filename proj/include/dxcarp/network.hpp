#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dxcarp/error.hpp"

namespace dxcarp {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class LinkKind : std::uint8_t { DirectionalArc, NonDirectionalEdge, VirtualDepot };

struct Node {
    NodeId id = 0;
    std::int64_t external_id = 0;
    std::optional<double> x;
    std::optional<double> y;
};

struct Link {
    LinkId id = 0;
    std::int64_t external_id = -1; // -1 for virtual depot links
    NodeId from = 0;
    NodeId to = 0;
    double length = 0.0; // meters
    LinkKind kind = LinkKind::NonDirectionalEdge;
    bool is_demand = false;
    double water_demand = 0.0;

    bool is_virtual() const { return kind == LinkKind::VirtualDepot; }
};

// Parsed, unvalidated description of a road network. Identifiers are the
// caller's; they are remapped to dense indices by build_network.
struct NodeSpec {
    std::int64_t id = 0;
    std::optional<double> x;
    std::optional<double> y;
};

struct LinkSpec {
    std::int64_t id = 0;
    std::int64_t from = 0;
    std::int64_t to = 0;
    double length = 0.0;
    LinkKind kind = LinkKind::NonDirectionalEdge;
    bool is_demand = false;
};

struct NetworkSpec {
    std::vector<NodeSpec> nodes;
    std::vector<std::int64_t> depots;
    std::vector<LinkSpec> links;
    // Water used per meter sprinkled. With the default of 1 both demand and
    // tank capacity are expressed in meters of serviceable street.
    double sprinkling_rate = 1.0;
};

// Dense row-major node-to-node matrix.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n, double fill = kInfinity) : n_(n), d_(n * n, fill) {}

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return d_[i * n_ + j]; }

    friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

// Deadhead graph: every real link is traversable; arcs only in their stated
// direction, edges both ways. Virtual depot links are zero-length self-loops
// and never shorten anything.
inline DistanceMatrix floyd_warshall(std::size_t node_count, std::span<const Link> links) {
    DistanceMatrix d(node_count);
    for (std::size_t i = 0; i < node_count; ++i) d(i, i) = 0.0;
    for (const Link& l : links) {
        if (l.is_virtual()) continue;
        d(l.from, l.to) = std::min(d(l.from, l.to), l.length);
        if (l.kind == LinkKind::NonDirectionalEdge) {
            d(l.to, l.from) = std::min(d(l.to, l.from), l.length);
        }
    }
    for (std::size_t k = 0; k < node_count; ++k) {
        for (std::size_t i = 0; i < node_count; ++i) {
            const double dik = d(i, k);
            if (dik == kInfinity) continue;
            for (std::size_t j = 0; j < node_count; ++j) {
                const double via = dik + d(k, j);
                if (via < d(i, j)) d(i, j) = via;
            }
        }
    }
    for (std::size_t i = 0; i < node_count; ++i) {
        for (std::size_t j = 0; j < node_count; ++j) {
            if (d(i, j) == kInfinity) {
                throw Error(ErrorCode::Unreachable,
                            "no path from node " + std::to_string(i) + " to node " + std::to_string(j));
            }
        }
    }
    return d;
}

class MixedNetwork {
public:
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<NodeId>& depots() const { return depots_; }
    const std::vector<Link>& links() const { return links_; }
    const DistanceMatrix& distances() const { return dist_; }
    double sprinkling_rate() const { return sprinkling_rate_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t link_count() const { return links_.size(); }
    const Link& link(LinkId id) const { return links_.at(id); }
    double dist(NodeId from, NodeId to) const { return dist_(from, to); }

    bool is_depot(NodeId n) const { return std::find(depots_.begin(), depots_.end(), n) != depots_.end(); }

    // Water needed to sprinkle a real link once, whether or not it is part of
    // the fixed demand set. New demands may land on any street.
    double service_demand(LinkId id) const { return sprinkling_rate_ * links_.at(id).length; }

    std::vector<LinkId> demand_links() const {
        std::vector<LinkId> out;
        for (const Link& l : links_) {
            if (l.is_demand) out.push_back(l.id);
        }
        return out;
    }

    std::vector<LinkId> virtual_links() const {
        std::vector<LinkId> out;
        for (const Link& l : links_) {
            if (l.is_virtual()) out.push_back(l.id);
        }
        return out;
    }

    std::optional<NodeId> find_node(std::int64_t external) const {
        auto it = node_index_.find(external);
        if (it == node_index_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<LinkId> find_link(std::int64_t external) const {
        auto it = link_index_.find(external);
        if (it == link_index_.end()) return std::nullopt;
        return it->second;
    }

    NodeId node_of(std::int64_t external) const {
        if (auto n = find_node(external)) return *n;
        throw Error(ErrorCode::DanglingEndpoint, "unknown node " + std::to_string(external));
    }
    LinkId link_of(std::int64_t external) const {
        if (auto l = find_link(external)) return *l;
        throw Error(ErrorCode::UnknownLink, "unknown link " + std::to_string(external));
    }

    friend MixedNetwork build_network(const NetworkSpec& spec);

private:
    std::vector<Node> nodes_;
    std::vector<NodeId> depots_;
    std::vector<Link> links_;
    DistanceMatrix dist_;
    double sprinkling_rate_ = 1.0;
    std::unordered_map<std::int64_t, NodeId> node_index_;
    std::unordered_map<std::int64_t, LinkId> link_index_;
};

namespace detail {

inline bool strongly_connected(std::size_t n, std::span<const Link> links) {
    if (n == 0) return false;
    std::vector<std::vector<NodeId>> fwd(n), bwd(n);
    for (const Link& l : links) {
        if (l.is_virtual()) continue;
        fwd[l.from].push_back(l.to);
        bwd[l.to].push_back(l.from);
        if (l.kind == LinkKind::NonDirectionalEdge) {
            fwd[l.to].push_back(l.from);
            bwd[l.from].push_back(l.to);
        }
    }
    auto reach_all = [n](const std::vector<std::vector<NodeId>>& adj) {
        std::vector<bool> seen(n, false);
        std::queue<NodeId> q;
        q.push(0);
        seen[0] = true;
        std::size_t count = 1;
        while (!q.empty()) {
            NodeId u = q.front();
            q.pop();
            for (NodeId v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = true;
                    ++count;
                    q.push(v);
                }
            }
        }
        return count == n;
    };
    return reach_all(fwd) && reach_all(bwd);
}

} // namespace detail

// Validates the description, appends one zero-length virtual link per depot
// and computes the all-pairs deadhead matrix. Directional arcs make the
// matrix asymmetric in general.
inline MixedNetwork build_network(const NetworkSpec& spec) {
    MixedNetwork net;
    net.sprinkling_rate_ = spec.sprinkling_rate;
    if (!(spec.sprinkling_rate > 0.0)) {
        throw Error(ErrorCode::SchemaError, "sprinkling_rate must be positive");
    }

    for (const NodeSpec& ns : spec.nodes) {
        const auto dense = static_cast<NodeId>(net.nodes_.size());
        if (!net.node_index_.emplace(ns.id, dense).second) {
            throw Error(ErrorCode::DuplicateId, "node " + std::to_string(ns.id));
        }
        net.nodes_.push_back(Node{dense, ns.id, ns.x, ns.y});
    }

    if (spec.depots.empty()) throw Error(ErrorCode::NoDepot, "network declares no depot");
    for (std::int64_t d : spec.depots) {
        auto it = net.node_index_.find(d);
        if (it == net.node_index_.end()) {
            throw Error(ErrorCode::DanglingEndpoint, "depot references missing node " + std::to_string(d));
        }
        if (net.is_depot(it->second)) throw Error(ErrorCode::DuplicateId, "depot " + std::to_string(d));
        net.depots_.push_back(it->second);
    }

    bool any_demand = false;
    for (const LinkSpec& ls : spec.links) {
        if (ls.kind == LinkKind::VirtualDepot) {
            throw Error(ErrorCode::SchemaError, "virtual links are generated, not declared");
        }
        const auto dense = static_cast<LinkId>(net.links_.size());
        if (!net.link_index_.emplace(ls.id, dense).second) {
            throw Error(ErrorCode::DuplicateId, "link " + std::to_string(ls.id));
        }
        auto from = net.node_index_.find(ls.from);
        auto to = net.node_index_.find(ls.to);
        if (from == net.node_index_.end() || to == net.node_index_.end()) {
            const std::int64_t missing = from == net.node_index_.end() ? ls.from : ls.to;
            throw Error(ErrorCode::DanglingEndpoint,
                        "link " + std::to_string(ls.id) + " references missing node " + std::to_string(missing));
        }
        if (!(ls.length > 0.0)) {
            throw Error(ErrorCode::SchemaError, "link " + std::to_string(ls.id) + " has non-positive length");
        }
        Link l;
        l.id = dense;
        l.external_id = ls.id;
        l.from = from->second;
        l.to = to->second;
        l.length = ls.length;
        l.kind = ls.kind;
        l.is_demand = ls.is_demand;
        l.water_demand = ls.is_demand ? spec.sprinkling_rate * ls.length : 0.0;
        any_demand = any_demand || ls.is_demand;
        net.links_.push_back(l);
    }
    if (!any_demand) throw Error(ErrorCode::NoDemand, "network has no demand link");

    for (NodeId d : net.depots_) {
        Link v;
        v.id = static_cast<LinkId>(net.links_.size());
        v.from = d;
        v.to = d;
        v.kind = LinkKind::VirtualDepot;
        net.links_.push_back(v);
    }

    if (!detail::strongly_connected(net.nodes_.size(), net.links_)) {
        throw Error(ErrorCode::DisconnectedGraph, "some node pair has no deadhead path");
    }
    net.dist_ = floyd_warshall(net.nodes_.size(), net.links_);
    return net;
}

inline DistanceMatrix all_pairs_shortest(const MixedNetwork& net) {
    return floyd_warshall(net.node_count(), net.links());
}

// Deadhead meters from the end of one task to the start of the next.
inline double deadhead(const MixedNetwork& net, NodeId from_task_end, NodeId to_task_start) {
    if (from_task_end == to_task_start) return 0.0;
    return net.dist(from_task_end, to_task_start);
}

} // namespace dxcarp

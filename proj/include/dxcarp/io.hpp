#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dxcarp/alns.hpp"
#include "dxcarp/config.hpp"
#include "dxcarp/dynamic.hpp"
#include "dxcarp/error.hpp"
#include "dxcarp/network.hpp"
#include "dxcarp/rng.hpp"
#include "dxcarp/solution.hpp"

namespace dxcarp {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr const char* kNetworkSchema = "dxcarp.network/1";
inline constexpr const char* kDemandsSchema = "dxcarp.demands/1";
inline constexpr const char* kEventsSchema = "dxcarp.events/1";
inline constexpr const char* kConfigSchema = "dxcarp.config/1";
inline constexpr const char* kPlanSchema = "dxcarp.plan/1";
inline constexpr const char* kReportSchema = "dxcarp.replan-report/1";

using Json = nlohmann::json;

namespace detail {

inline Json parse_text(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, what + ": " + e.what());
    }
}

[[noreturn]] inline void schema_fail(const std::string& where, const std::string& msg) {
    throw Error(ErrorCode::SchemaError, where + ": " + msg);
}

inline const Json& member(const Json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) schema_fail(where, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) schema_fail(where + "." + key, "missing field");
    return *it;
}

inline double number(const Json& v, const std::string& where) {
    if (!v.is_number()) schema_fail(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_fail(where, "not finite");
    return d;
}

inline std::int64_t integer(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) schema_fail(where, "expected an integer");
    return v.get<std::int64_t>();
}

inline bool boolean(const Json& v, const std::string& where) {
    if (!v.is_boolean()) schema_fail(where, "expected true or false");
    return v.get<bool>();
}

inline const std::string& string(const Json& v, const std::string& where) {
    if (!v.is_string()) schema_fail(where, "expected a string");
    return v.get_ref<const std::string&>();
}

inline const Json& array(const Json& v, const std::string& where) {
    if (!v.is_array()) schema_fail(where, "expected an array");
    return v;
}

inline void expect_schema(const Json& doc, const char* schema, const std::string& what) {
    const std::string& s = string(member(doc, "schema", what), what + ".schema");
    if (s != schema) schema_fail(what + ".schema", "expected \"" + std::string(schema) + "\", got \"" + s + "\"");
}

inline std::string at(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline LinkId link_ref(const MixedNetwork& net, const Json& v, const std::string& where) {
    const std::int64_t ext = integer(v, where);
    const std::optional<LinkId> id = net.find_link(ext);
    if (!id) schema_fail(where, "unknown link " + std::to_string(ext));
    return *id;
}

inline NodeId node_ref(const MixedNetwork& net, const Json& v, const std::string& where) {
    const std::int64_t ext = integer(v, where);
    const std::optional<NodeId> id = net.find_node(ext);
    if (!id) schema_fail(where, "unknown node " + std::to_string(ext));
    return *id;
}

} // namespace detail

// Network documents.

inline NetworkSpec parse_network(const std::string& text) {
    const Json doc = detail::parse_text(text, "network");
    detail::expect_schema(doc, kNetworkSchema, "network");
    NetworkSpec spec;
    if (doc.contains("sprinkling_rate")) {
        spec.sprinkling_rate = detail::number(doc["sprinkling_rate"], "network.sprinkling_rate");
        if (spec.sprinkling_rate <= 0.0) detail::schema_fail("network.sprinkling_rate", "must be positive");
    }
    const Json& nodes = detail::array(detail::member(doc, "nodes", "network"), "network.nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string w = detail::at("network.nodes", i);
        NodeSpec n;
        n.id = detail::integer(detail::member(nodes[i], "id", w), w + ".id");
        if (nodes[i].contains("x")) n.x = detail::number(nodes[i]["x"], w + ".x");
        if (nodes[i].contains("y")) n.y = detail::number(nodes[i]["y"], w + ".y");
        spec.nodes.push_back(n);
    }
    const Json& depots = detail::array(detail::member(doc, "depots", "network"), "network.depots");
    for (std::size_t i = 0; i < depots.size(); ++i) {
        spec.depots.push_back(detail::integer(depots[i], detail::at("network.depots", i)));
    }
    const Json& links = detail::array(detail::member(doc, "links", "network"), "network.links");
    for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string w = detail::at("network.links", i);
        const Json& l = links[i];
        LinkSpec s;
        s.id = detail::integer(detail::member(l, "id", w), w + ".id");
        s.from = detail::integer(detail::member(l, "from", w), w + ".from");
        s.to = detail::integer(detail::member(l, "to", w), w + ".to");
        s.length = detail::number(detail::member(l, "length", w), w + ".length");
        const std::string& kind = detail::string(detail::member(l, "kind", w), w + ".kind");
        if (kind == "arc") {
            s.kind = LinkKind::DirectionalArc;
        } else if (kind == "edge") {
            s.kind = LinkKind::NonDirectionalEdge;
        } else {
            detail::schema_fail(w + ".kind", "expected \"arc\" or \"edge\", got \"" + kind + "\"");
        }
        s.is_demand = l.contains("demand") ? detail::boolean(l["demand"], w + ".demand") : false;
        spec.links.push_back(s);
    }
    return spec;
}

inline std::string emit_network(const NetworkSpec& spec) {
    Json doc;
    doc["schema"] = kNetworkSchema;
    doc["sprinkling_rate"] = spec.sprinkling_rate;
    Json nodes = Json::array();
    for (const NodeSpec& n : spec.nodes) {
        Json j{{"id", n.id}};
        if (n.x) j["x"] = *n.x;
        if (n.y) j["y"] = *n.y;
        nodes.push_back(j);
    }
    doc["nodes"] = nodes;
    doc["depots"] = spec.depots;
    Json links = Json::array();
    for (const LinkSpec& l : spec.links) {
        links.push_back({{"id", l.id},
                         {"from", l.from},
                         {"to", l.to},
                         {"length", l.length},
                         {"kind", l.kind == LinkKind::DirectionalArc ? "arc" : "edge"},
                         {"demand", l.is_demand}});
    }
    doc["links"] = links;
    return doc.dump(2) + "\n";
}

inline MixedNetwork load_network(const std::string& text) { return build_network(parse_network(text)); }

// Demand documents list the links to serve in the planning cycle.

inline std::vector<LinkId> parse_demands(const std::string& text, const MixedNetwork& net) {
    const Json doc = detail::parse_text(text, "demands");
    detail::expect_schema(doc, kDemandsSchema, "demands");
    const Json& links = detail::array(detail::member(doc, "links", "demands"), "demands.links");
    std::vector<LinkId> out;
    std::set<LinkId> seen;
    for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string w = detail::at("demands.links", i);
        const LinkId id = detail::link_ref(net, links[i], w);
        if (!seen.insert(id).second) detail::schema_fail(w, "duplicate link " + std::to_string(links[i].get<std::int64_t>()));
        out.push_back(id);
    }
    if (out.empty()) throw Error(ErrorCode::NoDemand, "demands.links: empty");
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string emit_demands(const std::vector<LinkId>& demands, const MixedNetwork& net) {
    Json links = Json::array();
    for (LinkId id : demands) links.push_back(net.link(id).external_id);
    return Json{{"schema", kDemandsSchema}, {"links", links}}.dump(2) + "\n";
}

// Event documents. Either {"events": [...]} or a single event object.

inline DemandEvent parse_event_object(const Json& e, const MixedNetwork& net, double default_window,
                                      const std::string& where) {
    DemandEvent ev;
    ev.receipt_time = detail::number(detail::member(e, "time", where), where + ".time");
    if (ev.receipt_time < 0.0) detail::schema_fail(where + ".time", "must be non-negative");
    ev.window_length = e.contains("window") ? detail::number(e["window"], where + ".window") : default_window;
    if (ev.window_length < 0.0) detail::schema_fail(where + ".window", "must be non-negative");
    const Json& links = detail::array(detail::member(e, "links", where), where + ".links");
    for (std::size_t i = 0; i < links.size(); ++i) {
        ev.links.push_back(detail::link_ref(net, links[i], detail::at(where + ".links", i)));
    }
    return ev;
}

inline std::vector<DemandEvent> parse_events(const std::string& text, const MixedNetwork& net,
                                             double default_window = SolverConfig{}.window_length) {
    const Json doc = detail::parse_text(text, "events");
    detail::expect_schema(doc, kEventsSchema, "events");
    std::vector<DemandEvent> out;
    if (doc.contains("events")) {
        const Json& events = detail::array(doc["events"], "events.events");
        for (std::size_t i = 0; i < events.size(); ++i) {
            out.push_back(parse_event_object(events[i], net, default_window, detail::at("events.events", i)));
        }
    } else {
        out.push_back(parse_event_object(doc, net, default_window, "events"));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const DemandEvent& a, const DemandEvent& b) { return a.receipt_time < b.receipt_time; });
    return out;
}

inline std::string emit_events(const std::vector<DemandEvent>& events, const MixedNetwork& net) {
    Json arr = Json::array();
    for (const DemandEvent& e : events) {
        Json links = Json::array();
        for (LinkId id : e.links) links.push_back(net.link(id).external_id);
        arr.push_back({{"time", e.receipt_time}, {"window", e.window_length}, {"links", links}});
    }
    return Json{{"schema", kEventsSchema}, {"events", arr}}.dump(2) + "\n";
}

// Configuration documents. Every field is optional.

inline Json config_to_json(const SolverConfig& c) {
    return Json{{"capacity", c.capacity},
                {"sprinkling_speed_kmh", c.sprinkling_speed_kmh},
                {"deadhead_speed_kmh", c.deadhead_speed_kmh},
                {"max_work_spread", c.max_work_spread},
                {"removal_fraction", c.removal_fraction},
                {"lateness_weight", c.lateness_weight},
                {"penalty_unit_scale", c.penalty_unit_scale},
                {"stagnation_threshold", c.stagnation_threshold},
                {"shake_period", c.shake_period},
                {"max_non_improving", c.max_non_improving},
                {"max_iterations", c.max_iterations},
                {"weight_phase", c.weight_phase},
                {"weight_min", c.weight_min},
                {"weight_max", c.weight_max},
                {"score_accepted", c.score_accepted},
                {"score_improved", c.score_improved},
                {"score_best", c.score_best},
                {"weight_decay", c.weight_decay},
                {"noise_scale", c.noise_scale},
                {"shake_fraction", c.shake_fraction},
                {"accel_ratio", c.accel_ratio},
                {"recency", c.recency},
                {"window_length", c.window_length},
                {"balance_weight", c.balance_weight},
                {"worse_accept_fraction", c.worse_accept_fraction},
                {"cooling_rate", c.cooling_rate},
                {"temperature_floor", c.temperature_floor},
                {"tabu_capacity", c.tabu_capacity},
                {"recompute_period", c.recompute_period},
                {"max_balance_iters", c.max_balance_iters},
                {"time_limit_s", c.time_limit_s},
                {"seed", c.seed},
                {"variant", c.variant == Variant::Improved ? "improved" : "plain"}};
}

inline Variant parse_variant(const std::string& s, const std::string& where = "variant") {
    if (s == "improved") return Variant::Improved;
    if (s == "plain") return Variant::Plain;
    detail::schema_fail(where, "expected \"improved\" or \"plain\", got \"" + s + "\"");
}

inline SolverConfig config_from_json(const Json& doc, const std::string& where) {
    SolverConfig c;
    if (!doc.is_object()) detail::schema_fail(where, "expected an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& k = it.key();
        const Json& v = it.value();
        const std::string w = where + "." + k;
        auto num = [&] { return detail::number(v, w); };
        auto pos = [&] {
            const double d = num();
            if (d <= 0.0) detail::schema_fail(w, "must be positive");
            return d;
        };
        auto nonneg = [&] {
            const double d = num();
            if (d < 0.0) detail::schema_fail(w, "must be non-negative");
            return d;
        };
        auto count = [&] {
            const std::int64_t n = detail::integer(v, w);
            if (n < 0) detail::schema_fail(w, "must be non-negative");
            return static_cast<int>(n);
        };
        auto fraction = [&] {
            const double d = num();
            if (d < 0.0 || d > 1.0) detail::schema_fail(w, "must lie in [0, 1]");
            return d;
        };
        if (k == "schema") {
            if (detail::string(v, w) != kConfigSchema) detail::schema_fail(w, "unsupported schema");
        } else if (k == "capacity") {
            c.capacity = pos();
        } else if (k == "sprinkling_speed_kmh") {
            c.sprinkling_speed_kmh = pos();
        } else if (k == "deadhead_speed_kmh") {
            c.deadhead_speed_kmh = pos();
        } else if (k == "max_work_spread") {
            c.max_work_spread = nonneg();
        } else if (k == "removal_fraction") {
            c.removal_fraction = fraction();
        } else if (k == "lateness_weight") {
            c.lateness_weight = nonneg();
        } else if (k == "penalty_unit_scale") {
            c.penalty_unit_scale = nonneg();
        } else if (k == "stagnation_threshold") {
            c.stagnation_threshold = count();
        } else if (k == "shake_period") {
            c.shake_period = count();
        } else if (k == "max_non_improving") {
            c.max_non_improving = count();
        } else if (k == "max_iterations") {
            c.max_iterations = count();
        } else if (k == "weight_phase") {
            c.weight_phase = count();
        } else if (k == "weight_min") {
            c.weight_min = pos();
        } else if (k == "weight_max") {
            c.weight_max = pos();
        } else if (k == "score_accepted") {
            c.score_accepted = nonneg();
        } else if (k == "score_improved") {
            c.score_improved = nonneg();
        } else if (k == "score_best") {
            c.score_best = nonneg();
        } else if (k == "weight_decay") {
            c.weight_decay = fraction();
        } else if (k == "noise_scale") {
            c.noise_scale = nonneg();
        } else if (k == "shake_fraction") {
            c.shake_fraction = fraction();
        } else if (k == "accel_ratio") {
            c.accel_ratio = pos();
        } else if (k == "recency") {
            c.recency = nonneg();
        } else if (k == "window_length") {
            c.window_length = nonneg();
        } else if (k == "balance_weight") {
            c.balance_weight = nonneg();
        } else if (k == "worse_accept_fraction") {
            c.worse_accept_fraction = pos();
        } else if (k == "cooling_rate") {
            c.cooling_rate = fraction();
        } else if (k == "temperature_floor") {
            c.temperature_floor = nonneg();
        } else if (k == "tabu_capacity") {
            c.tabu_capacity = count();
        } else if (k == "recompute_period") {
            c.recompute_period = count();
        } else if (k == "max_balance_iters") {
            c.max_balance_iters = count();
        } else if (k == "time_limit_s") {
            c.time_limit_s = nonneg();
        } else if (k == "seed") {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                detail::schema_fail(w, "expected a non-negative integer");
            }
            c.seed = v.get<std::uint64_t>();
        } else if (k == "variant") {
            c.variant = parse_variant(detail::string(v, w), w);
        } else {
            detail::schema_fail(w, "unknown field");
        }
    }
    if (c.weight_min > c.weight_max) detail::schema_fail(where, "weight_min exceeds weight_max");
    return c;
}

inline SolverConfig parse_config(const std::string& text) {
    return config_from_json(detail::parse_text(text, "config"), "config");
}

inline std::string emit_config(const SolverConfig& c) {
    Json doc = config_to_json(c);
    doc["schema"] = kConfigSchema;
    return doc.dump(2) + "\n";
}

// Plan documents.

struct PlanDocument {
    Solution solution;
    ObjectiveBreakdown objective;
    SolverConfig config;
    std::uint64_t seed = 0;
    int iterations = 0;
    std::vector<TraceRow> trace;
    std::optional<double> wall_s; // left out by default so documents stay byte-identical across runs
    std::string version = kVersion;
};

inline PlanDocument make_plan_document(const Solution& sol, const MixedNetwork& net, const SolverConfig& cfg,
                                       const AlnsResult* search = nullptr) {
    PlanDocument doc;
    doc.solution = sol;
    refresh(doc.solution, net, cfg);
    doc.objective = evaluate(doc.solution, net, cfg);
    doc.config = cfg;
    doc.seed = cfg.seed;
    if (search != nullptr) {
        doc.iterations = search->iterations;
        doc.trace = search->trace;
    }
    return doc;
}

inline const char* to_string(Direction d) { return d == Direction::Forward ? "forward" : "reverse"; }

inline std::string emit_plan(const PlanDocument& plan, const MixedNetwork& net) {
    const SolverConfig& cfg = plan.config;
    const double vr = cfg.service_speed();
    Json routes = Json::array();
    for (const Route& r : plan.solution.routes) {
        Json tasks = Json::array();
        for (std::size_t i = 0; i < r.tasks.size(); ++i) {
            const ServiceTask& t = r.tasks[i];
            const double start = i < r.start_times.size() ? r.start_times[i] : 0.0;
            tasks.push_back({{"link", net.link(t.link).external_id},
                             {"direction", to_string(t.dir)},
                             {"start", start},
                             {"end", start + net.link(t.link).length / vr}});
        }
        routes.push_back({{"vehicle", r.vehicle},
                          {"depot", net.nodes()[r.depot].external_id},
                          {"anchor", net.nodes()[r.anchor].external_id},
                          {"start_time", r.start_time},
                          {"prior_work", r.prior_work},
                          {"capacity", r.capacity},
                          {"load", r.load},
                          {"service_m", r.service_m},
                          {"deadhead_m", r.deadhead_m},
                          {"work_min", r.work_time},
                          {"penalty", r.penalty},
                          {"tasks", tasks}});
    }
    Json windows = Json::array();
    for (std::size_t id = 0; id < plan.solution.windows.size(); ++id) {
        if (const auto& w = plan.solution.windows[id]) {
            windows.push_back({{"link", net.link(static_cast<LinkId>(id)).external_id},
                               {"open", w->open},
                               {"close", w->close}});
        }
    }
    Json history = Json::array();
    for (const ServiceRecord& rec : plan.solution.history) {
        history.push_back({{"link", net.link(rec.link).external_id}, {"completed_at", rec.completed_at}});
    }
    Json trace = Json::array();
    for (const TraceRow& t : plan.trace) {
        trace.push_back(Json::array({t.iter, t.f_curr, t.f_best, t.pair, t.accepted, t.temperature}));
    }
    Json doc{{"schema", kPlanSchema},
             {"version", plan.version},
             {"stage", plan.solution.stage == Stage::Fixed ? "fixed" : "replan"},
             {"seed", plan.seed},
             {"iterations", plan.iterations},
             {"config", config_to_json(plan.config)},
             {"objective",
              {{"service_m", plan.objective.service_distance},
               {"deadhead_m", plan.objective.deadhead_distance},
               {"penalty", plan.objective.window_penalty},
               {"total", plan.objective.total}}},
             {"work_spread_min", work_spread(plan.solution)},
             {"routes", routes},
             {"windows", windows},
             {"history", history},
             {"trace", trace}};
    if (plan.wall_s) doc["wall_s"] = *plan.wall_s;
    return doc.dump(2) + "\n";
}

inline PlanDocument parse_plan(const std::string& text, const MixedNetwork& net) {
    const Json doc = detail::parse_text(text, "plan");
    detail::expect_schema(doc, kPlanSchema, "plan");
    PlanDocument plan;
    plan.version = detail::string(detail::member(doc, "version", "plan"), "plan.version");
    const std::string& stage = detail::string(detail::member(doc, "stage", "plan"), "plan.stage");
    if (stage == "fixed") {
        plan.solution.stage = Stage::Fixed;
    } else if (stage == "replan") {
        plan.solution.stage = Stage::Replan;
    } else {
        detail::schema_fail("plan.stage", "expected \"fixed\" or \"replan\"");
    }
    plan.seed = detail::member(doc, "seed", "plan").get<std::uint64_t>();
    plan.iterations = static_cast<int>(detail::integer(detail::member(doc, "iterations", "plan"), "plan.iterations"));
    plan.config = config_from_json(detail::member(doc, "config", "plan"), "plan.config");

    const Json& obj = detail::member(doc, "objective", "plan");
    plan.objective.service_distance = detail::number(detail::member(obj, "service_m", "plan.objective"), "plan.objective.service_m");
    plan.objective.deadhead_distance = detail::number(detail::member(obj, "deadhead_m", "plan.objective"), "plan.objective.deadhead_m");
    plan.objective.window_penalty = detail::number(detail::member(obj, "penalty", "plan.objective"), "plan.objective.penalty");
    plan.objective.total = detail::number(detail::member(obj, "total", "plan.objective"), "plan.objective.total");

    const Json& windows = detail::array(detail::member(doc, "windows", "plan"), "plan.windows");
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const std::string w = detail::at("plan.windows", i);
        const LinkId id = detail::link_ref(net, detail::member(windows[i], "link", w), w + ".link");
        TimeWindow tw{detail::number(detail::member(windows[i], "open", w), w + ".open"),
                      detail::number(detail::member(windows[i], "close", w), w + ".close")};
        plan.solution.set_window(id, tw, net.link_count());
    }
    const Json& history = detail::array(detail::member(doc, "history", "plan"), "plan.history");
    for (std::size_t i = 0; i < history.size(); ++i) {
        const std::string w = detail::at("plan.history", i);
        plan.solution.history.push_back(
            {detail::link_ref(net, detail::member(history[i], "link", w), w + ".link"),
             detail::number(detail::member(history[i], "completed_at", w), w + ".completed_at")});
    }

    const Json& routes = detail::array(detail::member(doc, "routes", "plan"), "plan.routes");
    for (std::size_t i = 0; i < routes.size(); ++i) {
        const std::string w = detail::at("plan.routes", i);
        const Json& rj = routes[i];
        Route r;
        r.vehicle = static_cast<std::size_t>(detail::integer(detail::member(rj, "vehicle", w), w + ".vehicle"));
        r.depot = detail::node_ref(net, detail::member(rj, "depot", w), w + ".depot");
        if (!net.is_depot(r.depot)) detail::schema_fail(w + ".depot", "node is not a depot");
        r.anchor = detail::node_ref(net, detail::member(rj, "anchor", w), w + ".anchor");
        r.start_time = detail::number(detail::member(rj, "start_time", w), w + ".start_time");
        r.prior_work = detail::number(detail::member(rj, "prior_work", w), w + ".prior_work");
        r.capacity = detail::number(detail::member(rj, "capacity", w), w + ".capacity");
        const Json& tasks = detail::array(detail::member(rj, "tasks", w), w + ".tasks");
        for (std::size_t k = 0; k < tasks.size(); ++k) {
            const std::string tw = detail::at(w + ".tasks", k);
            ServiceTask t;
            t.link = detail::link_ref(net, detail::member(tasks[k], "link", tw), tw + ".link");
            const std::string& d = detail::string(detail::member(tasks[k], "direction", tw), tw + ".direction");
            if (d == "forward") {
                t.dir = Direction::Forward;
            } else if (d == "reverse") {
                t.dir = Direction::Reverse;
            } else {
                detail::schema_fail(tw + ".direction", "expected \"forward\" or \"reverse\"");
            }
            if (t.dir == Direction::Reverse && net.link(t.link).kind == LinkKind::DirectionalArc) {
                detail::schema_fail(tw + ".direction", "arc served against its direction");
            }
            r.tasks.push_back(t);
        }
        plan.solution.routes.push_back(std::move(r));
    }
    const Json& trace = detail::array(detail::member(doc, "trace", "plan"), "plan.trace");
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Json& row = trace[i];
        const std::string w = detail::at("plan.trace", i);
        if (!row.is_array() || row.size() != 6) detail::schema_fail(w, "expected 6 columns");
        TraceRow t;
        t.iter = static_cast<int>(detail::integer(row[0], w));
        t.f_curr = detail::number(row[1], w);
        t.f_best = detail::number(row[2], w);
        t.pair = static_cast<std::size_t>(detail::integer(row[3], w));
        t.accepted = detail::boolean(row[4], w);
        t.temperature = detail::number(row[5], w);
        plan.trace.push_back(t);
    }
    if (doc.contains("wall_s")) plan.wall_s = detail::number(doc["wall_s"], "plan.wall_s");

    try {
        refresh(plan.solution, net, plan.config);
    } catch (const Error& e) {
        detail::schema_fail("plan.routes", e.what());
    }
    return plan;
}

// Replan report.

inline std::string emit_replan_report(const ReplanResult& res, const DemandEvent& event, const MixedNetwork& net) {
    auto ext = [&](const std::vector<LinkId>& ids) {
        Json a = Json::array();
        for (LinkId id : ids) a.push_back(net.link(id).external_id);
        return a;
    };
    auto objective = [](const ObjectiveBreakdown& o) {
        return Json{{"service_m", o.service_distance},
                    {"deadhead_m", o.deadhead_distance},
                    {"penalty", o.window_penalty},
                    {"total", o.total}};
    };
    Json doc{{"schema", kReportSchema},
             {"event", {{"time", event.receipt_time}, {"window", event.window_length}, {"links", ext(event.links)}}},
             {"classification",
              {{"bring_forward", ext(res.classes.bring_forward)},
               {"skip_recent", ext(res.classes.skip_recent)},
               {"must_add", ext(res.classes.must_add)},
               {"counts",
                {{"bring_forward", res.classes.bring_forward.size()},
                 {"skip_recent", res.classes.skip_recent.size()},
                 {"must_add", res.classes.must_add.size()}}}}},
             {"water", {{"available", res.water_available}, {"needed", res.water_needed}}},
             {"added", ext(res.added)},
             {"deferred", ext(res.deferred)},
             {"traveled_before_m", res.state.traveled_m()},
             {"objective_before", objective(res.before)},
             {"objective_after", objective(res.after)},
             {"iterations", res.search.iterations}};
    return doc.dump(2) + "\n";
}

// KPI tables.

struct KpiRow {
    std::string scenario;
    double response_time = 0.0;
    double window_length = 0.0;
    double service_m = 0.0;
    double deadhead_m = 0.0;
    double penalty = 0.0;
    double work_spread_min = 0.0;
    double wall_ms = 0.0;
    int iterations = 0;
    double traveled_before_m = 0.0;
};

inline KpiRow kpi_row(const std::string& scenario, const Solution& sol, const ObjectiveBreakdown& obj,
                      double response_time, double window_length, double wall_ms, int iterations,
                      double traveled_before_m) {
    KpiRow row;
    row.scenario = scenario;
    row.response_time = response_time;
    row.window_length = window_length;
    row.service_m = obj.service_distance;
    row.deadhead_m = obj.deadhead_distance;
    row.penalty = obj.window_penalty;
    row.work_spread_min = work_spread(sol);
    row.wall_ms = wall_ms;
    row.iterations = iterations;
    row.traveled_before_m = traveled_before_m;
    return row;
}

inline constexpr const char* kKpiHeader =
    "scenario,response_time,window_length,service_m,deadhead_m,penalty,work_spread_min,wall_ms,iterations,"
    "traveled_before_m";

inline std::string format_kpi_row(const KpiRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f,%d,%.6f", r.scenario.c_str(), r.response_time,
                  r.window_length, r.service_m, r.deadhead_m, r.penalty, r.work_spread_min, r.wall_ms, r.iterations,
                  r.traveled_before_m);
    return buf;
}

inline std::string emit_kpis(const std::vector<KpiRow>& rows) {
    std::string out = std::string(kKpiHeader) + "\n";
    for (const KpiRow& r : rows) out += format_kpi_row(r) + "\n";
    return out;
}

inline std::vector<KpiRow> parse_kpis(const std::string& text) {
    std::vector<KpiRow> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kKpiHeader) detail::schema_fail("kpi line 1", "unexpected header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t s = 0;
        while (true) {
            const std::size_t c = line.find(',', s);
            cells.push_back(line.substr(s, c == std::string::npos ? std::string::npos : c - s));
            if (c == std::string::npos) break;
            s = c + 1;
        }
        const std::string w = "kpi line " + std::to_string(line_no);
        if (cells.size() != 10) detail::schema_fail(w, "expected 10 columns");
        KpiRow r;
        try {
            r.scenario = cells[0];
            r.response_time = std::stod(cells[1]);
            r.window_length = std::stod(cells[2]);
            r.service_m = std::stod(cells[3]);
            r.deadhead_m = std::stod(cells[4]);
            r.penalty = std::stod(cells[5]);
            r.work_spread_min = std::stod(cells[6]);
            r.wall_ms = std::stod(cells[7]);
            r.iterations = std::stoi(cells[8]);
            r.traveled_before_m = std::stod(cells[9]);
        } catch (const std::exception&) {
            detail::schema_fail(w, "malformed number");
        }
        rows.push_back(r);
    }
    return rows;
}

// Synthetic grid instances.

struct GridInstance {
    NetworkSpec spec;
    std::vector<std::int64_t> demands; // external link ids
};

// Node (r, c) has id r * cols + c + 1. Street segments are visited row by
// row, horizontal before vertical; each draws two uniforms (demand, then
// direction) so the stream layout does not depend on the fractions.
inline GridInstance generate_grid_instance(int rows, int cols, double edge_len, double demand_frac, double arc_frac,
                                           int n_depots, std::uint64_t seed) {
    if (rows < 2 || cols < 2) throw Error(ErrorCode::SchemaError, "grid needs at least 2 rows and 2 columns");
    if (!(demand_frac >= 0.0 && demand_frac <= 1.0) || !(arc_frac >= 0.0 && arc_frac <= 1.0)) {
        throw Error(ErrorCode::SchemaError, "fractions must lie in [0, 1]");
    }
    if (!(edge_len > 0.0)) throw Error(ErrorCode::SchemaError, "edge length must be positive");
    if (n_depots < 1 || n_depots > 4) throw Error(ErrorCode::SchemaError, "grid instances carry 1 to 4 depots");

    GridInstance inst;
    auto node = [cols](int r, int c) { return static_cast<std::int64_t>(r) * cols + c + 1; };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            inst.spec.nodes.push_back({node(r, c), c * edge_len, r * edge_len});
        }
    }
    const std::int64_t corners[4] = {node(0, 0), node(rows - 1, cols - 1), node(0, cols - 1), node(rows - 1, 0)};
    for (int i = 0; i < n_depots; ++i) inst.spec.depots.push_back(corners[i]);

    Rng rng(seed);
    std::int64_t next_id = 1;
    auto segment = [&](std::int64_t a, std::int64_t b) {
        const bool demand = rng.uniform() < demand_frac;
        const bool directional = rng.uniform() < arc_frac;
        if (demand && directional) {
            inst.spec.links.push_back({next_id, a, b, edge_len, LinkKind::DirectionalArc, true});
            inst.demands.push_back(next_id++);
            inst.spec.links.push_back({next_id, b, a, edge_len, LinkKind::DirectionalArc, true});
            inst.demands.push_back(next_id++);
        } else {
            inst.spec.links.push_back({next_id, a, b, edge_len, LinkKind::NonDirectionalEdge, demand});
            if (demand) inst.demands.push_back(next_id);
            ++next_id;
        }
    };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) segment(node(r, c), node(r, c + 1));
            if (r + 1 < rows) segment(node(r, c), node(r + 1, c));
        }
    }
    if (inst.demands.empty()) throw Error(ErrorCode::DegenerateInstance, "no demand links drawn");
    return inst;
}

inline std::vector<LinkId> demand_ids(const GridInstance& inst, const MixedNetwork& net) {
    std::vector<LinkId> out;
    for (std::int64_t ext : inst.demands) out.push_back(net.link_of(ext));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace dxcarp

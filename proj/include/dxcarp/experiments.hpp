#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "dxcarp/alns.hpp"
#include "dxcarp/construct.hpp"
#include "dxcarp/dynamic.hpp"
#include "dxcarp/io.hpp"

namespace dxcarp {

struct PlanRun {
    Solution solution;
    AlnsResult search;
    double wall_s = 0.0; // construction plus search
};

// Initial construction followed by the search, both driven by cfg.seed.
inline PlanRun plan(const MixedNetwork& net, const std::vector<LinkId>& demands, const SolverConfig& cfg,
                    const AlnsOptions& options = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    PlanRun out;
    const Solution built = construct_routes(net, demands, cfg, rng);
    Solution s0;
    try {
        s0 = balance_workload(built, net, cfg);
    } catch (const Error& e) {
        // some spreads close only by lengthening a route, which the move and
        // swap balancer never does; the search prices excess spread instead
        if (e.code() != ErrorCode::InfeasibleBalance) throw;
        s0 = built;
    }
    out.search = run_alns(std::move(s0), net, cfg, rng, options);
    out.solution = finalize_spread(out.search.best, net, cfg);
    out.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

enum class SweepParam { ResponseTime, WindowLength };

inline SweepParam parse_sweep_param(const std::string& s) {
    if (s == "response_time") return SweepParam::ResponseTime;
    if (s == "window_length") return SweepParam::WindowLength;
    throw Error(ErrorCode::SchemaError, "sweep-param: expected response_time or window_length, got \"" + s + "\"");
}

// Re-plans one fixed plan against the same event links, varying either the
// receipt time or the window length. Every point restarts from the same seed.
inline std::vector<KpiRow> run_sweep(const MixedNetwork& net, const Solution& fixed_plan, const DemandEvent& base_event,
                                     SweepParam param, const std::vector<double>& values, const SolverConfig& cfg) {
    std::vector<KpiRow> rows;
    for (double v : values) {
        DemandEvent ev = base_event;
        if (param == SweepParam::ResponseTime) {
            ev.receipt_time = v;
        } else {
            ev.window_length = v;
        }
        Rng rng(cfg.seed);
        const auto t0 = std::chrono::steady_clock::now();
        const ReplanResult res = replan(fixed_plan, ev, net, cfg, rng);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        char name[64];
        std::snprintf(name, sizeof name, "%s=%g", param == SweepParam::ResponseTime ? "response_time" : "window_length",
                      v);
        rows.push_back(kpi_row(name, res.plan, res.after, ev.receipt_time, ev.window_length, ms, res.search.iterations,
                               res.state.traveled_m()));
    }
    return rows;
}

struct BenchRun {
    std::uint64_t seed = 0;
    double objective = 0.0;
    double wall_s = 0.0;
    double time_to_best_s = 0.0;
    double obj_1min = 0.0;
    double obj_5min = 0.0;
    std::size_t vehicles = 0;
    int iterations = 0;
};

struct BenchSummary {
    Variant variant = Variant::Improved;
    std::vector<BenchRun> runs;
    double best = 0.0;        // Obj
    double t_best = 0.0;      // t: time to reach the final solution of the best run
    double obj_1min = 0.0;    // Obj(1min) of the best run
    double obj_5min = 0.0;    // Obj(5min) of the best run
    double mean = 0.0;        // ave
    std::size_t vehicles = 0; // num
    double median_objective = 0.0;
    double median_wall_s = 0.0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline BenchSummary summarize(Variant variant, std::vector<BenchRun> runs) {
    BenchSummary s;
    s.variant = variant;
    s.runs = std::move(runs);
    if (s.runs.empty()) return s;
    const auto best = std::min_element(s.runs.begin(), s.runs.end(), [](const BenchRun& a, const BenchRun& b) {
        return a.objective < b.objective;
    });
    s.best = best->objective;
    s.t_best = best->time_to_best_s;
    s.obj_1min = best->obj_1min;
    s.obj_5min = best->obj_5min;
    s.vehicles = best->vehicles;
    std::vector<double> objs, walls;
    for (const BenchRun& r : s.runs) {
        objs.push_back(r.objective);
        walls.push_back(r.wall_s);
    }
    s.mean = std::accumulate(objs.begin(), objs.end(), 0.0) / static_cast<double>(objs.size());
    s.median_objective = median(objs);
    s.median_wall_s = median(walls);
    return s;
}

// Runs the given variant once per seed, sequentially.
inline BenchSummary run_bench_variant(const MixedNetwork& net, const std::vector<LinkId>& demands, SolverConfig cfg,
                                      Variant variant, const std::vector<std::uint64_t>& seeds) {
    cfg.variant = variant;
    std::vector<BenchRun> runs;
    for (std::uint64_t seed : seeds) {
        cfg.seed = seed;
        const PlanRun pr = plan(net, demands, cfg);
        const double obj = evaluate(pr.solution, net, cfg).total;
        BenchRun r;
        r.seed = seed;
        r.objective = obj;
        r.wall_s = pr.wall_s;
        r.time_to_best_s = pr.search.time_to_best_s;
        // A run that ends before a checkpoint already holds its final answer there.
        r.obj_1min = pr.search.obj_at_1min.value_or(obj);
        r.obj_5min = pr.search.obj_at_5min.value_or(obj);
        r.vehicles = static_cast<std::size_t>(std::count_if(pr.solution.routes.begin(), pr.solution.routes.end(),
                                                            [](const Route& x) { return !x.tasks.empty(); }));
        r.iterations = pr.search.iterations;
        runs.push_back(r);
    }
    return summarize(variant, std::move(runs));
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
    std::vector<std::uint64_t> out(count);
    std::iota(out.begin(), out.end(), first);
    return out;
}

inline constexpr const char* kBenchHeader = "variant,Obj,t,Obj(1min),Obj(5min),ave,num,median_obj,median_wall_s,runs";

inline std::string format_bench(const std::vector<BenchSummary>& rows) {
    std::string out = std::string(kBenchHeader) + "\n";
    for (const BenchSummary& s : rows) {
        char buf[320];
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.3f,%.6f,%.6f,%.6f,%zu,%.6f,%.3f,%zu\n",
                      s.variant == Variant::Improved ? "improved" : "plain", s.best, s.t_best, s.obj_1min, s.obj_5min,
                      s.mean, s.vehicles, s.median_objective, s.median_wall_s, s.runs.size());
        out += buf;
    }
    return out;
}

} // namespace dxcarp

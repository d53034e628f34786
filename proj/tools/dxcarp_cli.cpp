#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dxcarp/dxcarp.hpp"

using namespace dxcarp;

namespace {

struct ExitCode {
    static constexpr int ok = 0;
    static constexpr int parse = 2;
    static constexpr int infeasible = 3;
    static constexpr int internal = 4;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::SchemaError, path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot write");
    out << text;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Infeasible:
    case ErrorCode::InfeasibleBalance:
    case ErrorCode::CapacityExceeded:
    case ErrorCode::NoFeasibleInsertion:
    case ErrorCode::TooLarge:
        return ExitCode::infeasible;
    default:
        return ExitCode::parse;
    }
}

struct Common {
    std::string network;
    std::string demands;
    std::string events;
    std::string config;
    std::string plan;
    std::string out;
    std::string kpi;
    std::string trace;
    std::string report;
    std::string variant;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double time_limit = -1.0;
    std::string sweep_param = "response_time";
    std::string sweep_values;
    std::size_t runs = 5;
    std::size_t vehicles = 1;
    bool with_wall = false;

    // generator
    int rows = 10;
    int cols = 10;
    double edge_len = 500.0;
    double demand_frac = 0.8;
    double arc_frac = 0.45;
    int depots = 2;
    std::string demands_out;
};

SolverConfig load_config(const Common& c) {
    SolverConfig cfg = c.config.empty() ? SolverConfig{} : parse_config(read_file(c.config));
    if (c.seed_set) cfg.seed = c.seed;
    if (!c.variant.empty()) cfg.variant = parse_variant(c.variant, "--variant");
    if (c.time_limit >= 0.0) cfg.time_limit_s = c.time_limit;
    return cfg;
}

std::vector<LinkId> load_demands(const Common& c, const MixedNetwork& net) {
    if (c.demands.empty()) return net.demand_links();
    return parse_demands(read_file(c.demands), net);
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "iter,f_curr,f_best,pair,accepted,temperature\n";
    char buf[200];
    for (const TraceRow& t : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.9f,%.9f,%zu,%d,%.9g\n", t.iter, t.f_curr, t.f_best, t.pair,
                      t.accepted ? 1 : 0, t.temperature);
        out += buf;
    }
    return out;
}

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw Error(ErrorCode::SchemaError, "--sweep-values: malformed number \"" + cell + "\"");
        }
    }
    if (out.empty()) throw Error(ErrorCode::SchemaError, "--sweep-values: empty list");
    return out;
}

int cmd_plan(const Common& c) {
    const MixedNetwork net = load_network(read_file(c.network));
    const std::vector<LinkId> demands = load_demands(c, net);
    const SolverConfig cfg = load_config(c);
    const PlanRun run = plan(net, demands, cfg, AlnsOptions{true});
    PlanDocument doc = make_plan_document(run.solution, net, cfg, &run.search);
    if (c.with_wall) doc.wall_s = run.wall_s;
    write_output(c.out, emit_plan(doc, net));
    if (!c.trace.empty()) write_output(c.trace, trace_csv(run.search.trace));
    if (!c.kpi.empty()) {
        write_output(c.kpi, emit_kpis({kpi_row("plan", run.solution, doc.objective, 0.0, 0.0, run.wall_s * 1000.0,
                                               run.search.iterations, 0.0)}));
    }
    std::fprintf(stderr, "objective %.6f, %d iterations, %.3f s\n", doc.objective.total, run.search.iterations,
                 run.wall_s);
    return ExitCode::ok;
}

int cmd_replan(const Common& c) {
    const MixedNetwork net = load_network(read_file(c.network));
    const PlanDocument in = parse_plan(read_file(c.plan), net);
    SolverConfig cfg = c.config.empty() ? in.config : parse_config(read_file(c.config));
    if (c.seed_set) cfg.seed = c.seed;
    if (!c.variant.empty()) cfg.variant = parse_variant(c.variant, "--variant");
    if (c.time_limit >= 0.0) cfg.time_limit_s = c.time_limit;
    const std::vector<DemandEvent> events = parse_events(read_file(c.events), net, cfg.window_length);

    Rng rng(cfg.seed);
    Solution current = in.solution;
    std::string reports;
    std::vector<KpiRow> kpis;
    AlnsResult last;
    for (const DemandEvent& ev : events) {
        const auto t0 = std::chrono::steady_clock::now();
        ReplanResult res = replan(current, ev, net, cfg, rng, AlnsOptions{true});
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        reports += emit_replan_report(res, ev, net);
        kpis.push_back(kpi_row("event@" + std::to_string(ev.receipt_time), res.plan, res.after, ev.receipt_time,
                               ev.window_length, ms, res.search.iterations, res.state.traveled_m()));
        current = std::move(res.plan);
        last = std::move(res.search);
    }
    write_output(c.out, emit_plan(make_plan_document(current, net, cfg, &last), net));
    if (!c.report.empty()) {
        write_output(c.report, reports);
    } else {
        std::cerr << reports;
    }
    if (!c.kpi.empty()) write_output(c.kpi, emit_kpis(kpis));
    if (!c.trace.empty()) write_output(c.trace, trace_csv(last.trace));
    return ExitCode::ok;
}

int report_audit(const std::string& label, const AuditReport& rep) {
    std::printf("%s: %s (%zu violations, %zu mismatches, objective %.6f)\n", label.c_str(),
                rep.passed() ? "ok" : "FAILED", rep.violations.size(), rep.diffs.size(), rep.recomputed_total);
    for (const Violation& v : rep.violations) std::printf("  violation %s: %s\n", to_string(v.kind), v.detail.c_str());
    for (const std::string& d : rep.diffs) std::printf("  mismatch %s\n", d.c_str());
    return rep.passed() ? 0 : 1;
}

int cmd_simulate(const Common& c) {
    const MixedNetwork net = load_network(read_file(c.network));
    const PlanDocument doc = parse_plan(read_file(c.plan), net);
    SolverConfig cfg = c.config.empty() ? doc.config : parse_config(read_file(c.config));
    if (c.seed_set) cfg.seed = c.seed;
    const std::vector<LinkId> required =
        doc.solution.stage == Stage::Fixed ? load_demands(c, net) : required_links(doc.solution);
    int failures = report_audit("plan", audit_solution(doc.solution, net, cfg, required));
    const double stated = doc.objective.total;
    const double actual = evaluate(doc.solution, net, cfg).total;
    if (std::fabs(stated - actual) > 1e-6) {
        std::printf("  stated objective %.9f differs from re-evaluation %.9f\n", stated, actual);
        ++failures;
    }
    if (!c.events.empty()) {
        Rng rng(cfg.seed);
        Solution current = doc.solution;
        for (const DemandEvent& ev : parse_events(read_file(c.events), net, cfg.window_length)) {
            const ReplanResult res = replan(current, ev, net, cfg, rng);
            failures += report_audit("replan@" + std::to_string(ev.receipt_time),
                                     audit_solution(res.plan, net, cfg, required_links(res.plan)));
            current = res.plan;
        }
    }
    return failures == 0 ? ExitCode::ok : ExitCode::infeasible;
}

DemandEvent default_event(const MixedNetwork& net, const SolverConfig& cfg) {
    std::vector<LinkId> pool;
    for (const Link& l : net.links()) {
        if (!l.is_virtual()) pool.push_back(l.id);
    }
    Rng rng(cfg.seed ^ 0x5eedULL);
    const std::size_t k = std::max<std::size_t>(1, pool.size() / 20);
    DemandEvent ev;
    ev.receipt_time = 60.0;
    ev.window_length = cfg.window_length;
    for (std::size_t i : rng.sample_indices(pool.size(), k)) ev.links.push_back(pool[i]);
    std::sort(ev.links.begin(), ev.links.end());
    return ev;
}

int cmd_sweep(const Common& c) {
    const MixedNetwork net = load_network(read_file(c.network));
    const std::vector<LinkId> demands = load_demands(c, net);
    const SolverConfig cfg = load_config(c);
    const SweepParam param = parse_sweep_param(c.sweep_param);
    const std::vector<double> values = parse_values(c.sweep_values);
    const DemandEvent ev = c.events.empty() ? default_event(net, cfg)
                                            : parse_events(read_file(c.events), net, cfg.window_length).front();
    Solution fixed;
    if (!c.plan.empty()) {
        fixed = parse_plan(read_file(c.plan), net).solution;
    } else {
        fixed = plan(net, demands, cfg).solution;
    }
    write_output(c.kpi.empty() ? c.out : c.kpi, emit_kpis(run_sweep(net, fixed, ev, param, values, cfg)));
    return ExitCode::ok;
}

int cmd_bench(const Common& c) {
    const MixedNetwork net = load_network(read_file(c.network));
    const std::vector<LinkId> demands = load_demands(c, net);
    const SolverConfig cfg = load_config(c);
    const std::vector<std::uint64_t> seeds = seed_range(cfg.seed, c.runs);
    std::vector<BenchSummary> rows;
    if (c.variant.empty() || c.variant == "improved") {
        rows.push_back(run_bench_variant(net, demands, cfg, Variant::Improved, seeds));
    }
    if (c.variant.empty() || c.variant == "plain") {
        rows.push_back(run_bench_variant(net, demands, cfg, Variant::Plain, seeds));
    }
    write_output(c.out, format_bench(rows));
    return ExitCode::ok;
}

int cmd_gen(const Common& c) {
    const std::uint64_t seed = c.seed_set ? c.seed : 1;
    const GridInstance inst =
        generate_grid_instance(c.rows, c.cols, c.edge_len, c.demand_frac, c.arc_frac, c.depots, seed);
    write_output(c.out, emit_network(inst.spec));
    if (!c.demands_out.empty()) {
        const MixedNetwork net = build_network(inst.spec);
        write_output(c.demands_out, emit_demands(demand_ids(inst, net), net));
    }
    return ExitCode::ok;
}

int cmd_oracle(const Common& c) {
    const MixedNetwork net = load_network(read_file(c.network));
    const std::vector<LinkId> demands = load_demands(c, net);
    const SolverConfig cfg = load_config(c);
    const OracleResult res = brute_force_optimum(net, demands, c.vehicles, cfg);
    Solution sol = res.solution;
    refresh(sol, net, cfg);
    PlanDocument doc = make_plan_document(sol, net, cfg);
    write_output(c.out, emit_plan(doc, net));
    std::fprintf(stderr, "optimum %.6f\n", res.objective);
    return ExitCode::ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-depot mixed arc routing for sprinkler fleets"};
    app.require_subcommand(1);
    Common c;

    auto add_seed = [&c](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
               "--seed", [&c](const std::uint64_t& s) { c.seed = s, c.seed_set = true; }, "Random seed");
    };
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "Solver configuration document")->check(CLI::ExistingFile);
        add_seed(sub);
        sub->add_option("--variant", c.variant, "improved or plain")->check(CLI::IsMember({"improved", "plain"}));
        sub->add_option("--time-limit", c.time_limit, "Wall-clock limit per search in seconds (0: none)");
    };

    CLI::App* p = app.add_subcommand("plan", "Plan fixed routes");
    p->add_option("--network", c.network, "Network document")->required()->check(CLI::ExistingFile);
    p->add_option("--demands", c.demands, "Demand document (default: the network's demand links)")
        ->check(CLI::ExistingFile);
    add_solver(p);
    p->add_option("--out", c.out, "Plan document (default: stdout)");
    p->add_option("--kpi", c.kpi, "KPI table");
    p->add_option("--trace", c.trace, "Per-iteration trace table");
    p->add_flag("--with-wall-time", c.with_wall, "Record wall time in the plan document");

    CLI::App* r = app.add_subcommand("replan", "Re-plan a plan against demand events");
    r->add_option("--network", c.network, "Network document")->required()->check(CLI::ExistingFile);
    r->add_option("--plan", c.plan, "Current plan document")->required()->check(CLI::ExistingFile);
    r->add_option("--events", c.events, "Event document")->required()->check(CLI::ExistingFile);
    add_solver(r);
    r->add_option("--out", c.out, "Re-planned document (default: stdout)");
    r->add_option("--report", c.report, "Replan report (default: stderr)");
    r->add_option("--kpi", c.kpi, "KPI table");
    r->add_option("--trace", c.trace, "Trace of the last search");

    CLI::App* s = app.add_subcommand("simulate", "Replay a plan and check timing and feasibility");
    s->add_option("--network", c.network, "Network document")->required()->check(CLI::ExistingFile);
    s->add_option("--plan", c.plan, "Plan document")->required()->check(CLI::ExistingFile);
    s->add_option("--demands", c.demands, "Demand document for a fixed plan")->check(CLI::ExistingFile);
    s->add_option("--events", c.events, "Events to replay on top of the plan")->check(CLI::ExistingFile);
    s->add_option("--config", c.config, "Override the plan's configuration")->check(CLI::ExistingFile);
    add_seed(s);

    CLI::App* w = app.add_subcommand("sweep", "Sensitivity sweep over response time or window length");
    w->add_option("--network", c.network, "Network document")->required()->check(CLI::ExistingFile);
    w->add_option("--demands", c.demands, "Demand document")->check(CLI::ExistingFile);
    w->add_option("--plan", c.plan, "Fixed plan to start from (default: plan first)")->check(CLI::ExistingFile);
    w->add_option("--events", c.events, "Event whose links are swept (default: a seeded sample)")
        ->check(CLI::ExistingFile);
    add_solver(w);
    w->add_option("--sweep-param", c.sweep_param, "response_time or window_length")
        ->check(CLI::IsMember({"response_time", "window_length"}));
    w->add_option("--sweep-values", c.sweep_values, "Comma-separated minutes, e.g. 20,30,40")->required();
    w->add_option("--kpi", c.kpi, "KPI table (default: --out or stdout)");
    w->add_option("--out", c.out, "KPI table");

    CLI::App* b = app.add_subcommand("bench", "Compare the improved and plain variants over seeds");
    b->add_option("--network", c.network, "Network document")->required()->check(CLI::ExistingFile);
    b->add_option("--demands", c.demands, "Demand document")->check(CLI::ExistingFile);
    add_solver(b);
    b->add_option("--runs", c.runs, "Seeds per variant")->check(CLI::PositiveNumber);
    b->add_option("--out", c.out, "Bench table (default: stdout)");

    CLI::App* g = app.add_subcommand("gen", "Generate a synthetic grid instance");
    g->add_option("--rows", c.rows, "Grid rows")->check(CLI::Range(2, 1000));
    g->add_option("--cols", c.cols, "Grid columns")->check(CLI::Range(2, 1000));
    g->add_option("--edge-len", c.edge_len, "Street length in meters");
    g->add_option("--demand-frac", c.demand_frac, "Probability a street needs sprinkling")->check(CLI::Range(0.0, 1.0));
    g->add_option("--arc-frac", c.arc_frac, "Probability a demand street is directional")->check(CLI::Range(0.0, 1.0));
    g->add_option("--depots", c.depots, "Number of corner depots")->check(CLI::Range(1, 4));
    add_seed(g);
    g->add_option("--out", c.out, "Network document (default: stdout)");
    g->add_option("--demands-out", c.demands_out, "Demand document");

    CLI::App* o = app.add_subcommand("oracle", "Exhaustive optimum of a tiny instance");
    o->group("");
    o->add_option("--network", c.network, "Network document")->required()->check(CLI::ExistingFile);
    o->add_option("--demands", c.demands, "Demand document")->check(CLI::ExistingFile);
    o->add_option("--vehicles", c.vehicles, "Fleet size")->check(CLI::PositiveNumber);
    o->add_option("--config", c.config, "Solver configuration document")->check(CLI::ExistingFile);
    o->add_option("--out", c.out, "Plan document (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ExitCode::parse;
    }

    try {
        if (p->parsed()) return cmd_plan(c);
        if (r->parsed()) return cmd_replan(c);
        if (s->parsed()) return cmd_simulate(c);
        if (w->parsed()) return cmd_sweep(c);
        if (b->parsed()) return cmd_bench(c);
        if (g->parsed()) return cmd_gen(c);
        if (o->parsed()) return cmd_oracle(c);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", std::string(to_string(e.code())).c_str(), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return ExitCode::internal;
    }
    return ExitCode::internal;
}

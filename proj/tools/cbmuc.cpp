#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cbmuc/cli.hpp"

using namespace cbmuc;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNotConverged = 3, kSolver = 4, kRuntime = 5 };

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string transport;
    std::string out;
    bool trace = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "key = value configuration file")->required();
    cmd->add_option("--set", c.sets, "override one key, as key=value");
    cmd->add_option("--seed", c.seed, "run seed");
    cmd->add_option("--threads", c.threads, "worker threads for epoch solves");
    cmd->add_option("--transport", c.transport, "inproc or socket");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_flag("--trace", c.trace, "write the message trace");
}

RunConfig configure(const Common& c) {
    RunConfig cfg = load_config(c.config);
    for (const std::string& s : c.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (c.seed) cfg.options.seed = c.seed;
    if (c.threads) cfg.options.threads = c.threads;
    if (!c.transport.empty()) apply_setting(cfg, "transport", c.transport);
    if (!c.out.empty()) cfg.out_dir = c.out;
    if (c.trace) cfg.write_trace = true;
    cfg.validate();
    return cfg;
}

void print_summary(const RunReport& r, const std::string& mode) {
    std::printf("%s run: %zu region(s), %.1f s\n", mode.c_str(), r.solutions.size(), r.seconds);
    for (const PhaseReport& p : r.phases)
        std::printf("  %-4s %-13s rounds %4d  gross %.2f  penalty %.4f  %.1f s\n", to_string(p.mode),
                    p.converged ? "converged" : "not converged", p.rounds, p.cost.gross(), p.cost.penalty, p.seconds);
    std::printf("  final: ops %.2f  cbm %.2f  dc %.2f  gross %.2f  upper bound %.2f\n", r.cost.operations,
                r.cost.maintenance, r.cost.curtailment, r.cost.gross(), r.upper_bound);
    std::printf("  cardinality %s, max nodal residual %.2e, inner cap hits %d, repairs %d, messages %lld\n",
                r.cardinality ? "ok" : "VIOLATED", r.max_nodal_residual, r.inner_cap_hits, r.repairs,
                static_cast<long long>(r.messages));
}

int run_mode(const Common& c, bool centralized) {
    RunConfig cfg = configure(c);
    RunInput in = load_input(cfg);
    const std::string mode = centralized ? "centralized" : "decentralized";
    RunReport r = centralized ? centralized_benchmark(in, cfg.options) : run_algorithm(in, cfg.options);
    write_artifacts(cfg.out_dir, r, mode, cfg.write_trace);
    print_summary(r, mode);
    std::printf("  artifacts in %s\n", cfg.out_dir.c_str());
    return r.converged() ? kOk : kNotConverged;
}

int validate_mode(const Common& c) {
    RunConfig cfg = configure(c);
    RunInput in = load_input(cfg);
    std::printf("configuration ok: %zu buses, %zu lines, %zu generators, %zu region(s)\n",
                in.pc.network.buses.size(), in.pc.network.lines.size(), in.pc.network.generators.size(),
                in.pc.regions.size());
    std::printf("grid: %d epochs, %d days, %d steps per day (%d steps)\n", in.grid.epochs, in.grid.days,
                in.grid.steps_per_day, in.grid.steps());
    for (const auto& [n, path] : cfg.partitions) {
        load_input(cfg, n);
        std::printf("partition_%d: ok\n", n);
    }
    return kOk;
}

int sweep_mode(const Common& c, const std::string& axis_name, const std::vector<int>& values, bool parallel) {
    RunConfig cfg = configure(c);
    SweepAxis axis = axis_name == "cgd" ? SweepAxis::Cgd : SweepAxis::Regions;
    for (int v : values)
        if (v < 1) throw ConfigError("sweep values must be >= 1");
    std::vector<SweepPoint> points = run_sweep(cfg, axis, values, parallel);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "sweep.csv");
    write_sweep(out, points);
    write_sweep(std::cout, points);
    for (const SweepPoint& p : points)
        if (!p.ok) return kSolver;
    for (const SweepPoint& p : points)
        if (!p.converged) return kNotConverged;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized joint maintenance and unit commitment"};
    app.require_subcommand(1);

    Common run_opts, cen_opts, val_opts, sweep_opts;
    auto* run = app.add_subcommand("run", "decentralized run");
    add_common(run, run_opts);
    auto* cen = app.add_subcommand("centralized", "whole network as one region");
    add_common(cen, cen_opts);
    auto* val = app.add_subcommand("validate", "check the configuration and input files");
    add_common(val, val_opts);
    auto* sweep = app.add_subcommand("sweep", "decentralized and centralized runs over one axis");
    add_common(sweep, sweep_opts);
    std::string axis;
    std::vector<int> values;
    bool parallel = false;
    sweep->add_option("--axis", axis, "cgd or regions")->required()->check(CLI::IsMember({"cgd", "regions"}));
    sweep->add_option("--values", values, "axis values")->required()->delimiter(',');
    sweep->add_flag("--parallel-points", parallel, "run points concurrently (timings become unreliable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run) return run_mode(run_opts, false);
        if (*cen) return run_mode(cen_opts, true);
        if (*val) return validate_mode(val_opts);
        return sweep_mode(sweep_opts, axis, values, parallel);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const SolverFailure& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
}

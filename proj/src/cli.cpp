#include "cbmuc/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "cbmuc/degradation.hpp"

namespace cbmuc {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(v))
        throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
    return v;
}

int to_int(const std::string& key, const std::string& value) {
    int v = 0;
    auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size())
        throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError("'" + key + "' expects a comma separated list");
    return out;
}

template <class E>
E to_enum(const std::string& key, const std::string& value, std::initializer_list<std::pair<const char*, E>> opts) {
    std::string names;
    for (const auto& [name, e] : opts) {
        if (value == name) return e;
        names += names.empty() ? name : std::string("|") + name;
    }
    throw ConfigError("'" + key + "' expects " + names + ", got '" + value + "'");
}

std::string resolve(const RunConfig& c, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(c.base_dir) / path).string();
}

// Suffix n of `<prefix>_<n>`, or -1.
int suffix(const std::string& key, const std::string& prefix) {
    if (key.size() <= prefix.size() + 1 || key.compare(0, prefix.size() + 1, prefix + "_") != 0) return -1;
    std::string tail = key.substr(prefix.size() + 1);
    if (!std::all_of(tail.begin(), tail.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        return -1;
    return std::stoi(tail);
}

// Profile for `cgd` steps per day: the base one or an explicit `profile_<cgd>`.
const std::vector<double>* profile_for(const RunConfig& c, int cgd) {
    if (static_cast<int>(c.profile.size()) == cgd) return &c.profile;
    auto it = c.profiles.find(cgd);
    return it != c.profiles.end() ? &it->second : nullptr;
}

const std::vector<std::string> kKeys{
    "case", "partition", "partition_<n>", "rld", "epochs", "days", "cgd", "profile", "profile_<n>", "kappa",
    "rho_theta", "rho_flow", "rho_p", "nu", "pwl_segments", "pwl_encoding", "abs_mode", "theta_halfwidth",
    "flow_halfwidth", "production_halfwidth", "angle_limit", "violation", "epsilon", "cap_fmrc", "cap_fmbc",
    "cap_bmbc", "inner_cap", "lub_scope", "transport", "threads", "seed", "round_timeout", "node_limit",
    "iteration_limit", "relative_gap", "out", "trace", "dump_dir"};

}  // namespace

std::vector<std::string> config_keys() { return kKeys; }

std::vector<double> resample_profile(const std::vector<double>& profile, int cgd) {
    if (profile.empty() || cgd < 1) throw ConfigError("cannot resample an empty profile");
    std::vector<double> out(cgd);
    for (int s = 0; s < cgd; ++s) out[s] = profile[s * profile.size() / cgd];
    return out;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    PenaltyConfig& p = c.options.penalty;
    if (key == "case") c.case_path = value;
    else if (key == "partition") c.partition_path = value;
    else if (int n = suffix(key, "partition"); n >= 0) {
        if (n < 1) throw ConfigError("'" + key + "': region count must be >= 1");
        c.partitions[n] = value;
    } else if (key == "rld") c.rld_path = value;
    else if (key == "epochs") c.grid.epochs = to_int(key, value);
    else if (key == "days") c.grid.days = to_int(key, value);
    else if (key == "cgd") c.grid.steps_per_day = to_int(key, value);
    else if (key == "profile") c.profile = to_list(key, value);
    else if (int n = suffix(key, "profile"); n >= 0) {
        auto list = to_list(key, value);
        if (static_cast<int>(list.size()) != n) throw ConfigError("'" + key + "' needs " + std::to_string(n) + " factors");
        c.profiles[n] = list;
    } else if (key == "kappa") c.kappa = to_double(key, value);
    else if (key == "rho_theta") p.rho_theta = to_double(key, value);
    else if (key == "rho_flow") p.rho_flow = to_double(key, value);
    else if (key == "rho_p") p.rho_p = to_double(key, value);
    else if (key == "nu") p.nu = to_double(key, value);
    else if (key == "pwl_segments") p.segments = to_int(key, value);
    else if (key == "pwl_encoding")
        p.encoding = to_enum<PwlEncoding>(key, value, {{"segments", PwlEncoding::Segments}, {"epigraph", PwlEncoding::Epigraph}});
    else if (key == "abs_mode") p.abs_mode = to_bool(key, value);
    else if (key == "theta_halfwidth") p.theta_halfwidth = to_double(key, value);
    else if (key == "flow_halfwidth") p.flow_halfwidth = to_double(key, value);
    else if (key == "production_halfwidth") p.production_halfwidth = to_double(key, value);
    else if (key == "angle_limit") p.angle_limit = to_double(key, value);
    else if (key == "violation")
        c.options.violation = to_enum<ViolationMode>(key, value, {{"signed", ViolationMode::Signed}, {"absolute", ViolationMode::Absolute}});
    else if (key == "epsilon") c.options.epsilon = to_double(key, value);
    else if (key == "cap_fmrc") c.options.cap_fmrc = to_int(key, value);
    else if (key == "cap_fmbc") c.options.cap_fmbc = to_int(key, value);
    else if (key == "cap_bmbc") c.options.cap_bmbc = to_int(key, value);
    else if (key == "inner_cap") c.options.inner_cap = to_int(key, value);
    else if (key == "lub_scope")
        c.options.lub_scope = to_enum<LubScope>(key, value, {{"global", LubScope::Global}, {"regional", LubScope::Regional}});
    else if (key == "transport")
        c.options.transport = to_enum<TransportKind>(key, value, {{"inproc", TransportKind::InProcess}, {"socket", TransportKind::Socket}});
    else if (key == "threads") c.options.threads = to_int(key, value);
    else if (key == "seed") c.options.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "round_timeout") c.options.round_timeout = to_double(key, value);
    else if (key == "node_limit") c.options.limits.node_limit = to_int(key, value);
    else if (key == "iteration_limit") c.options.limits.iteration_limit = to_int(key, value);
    else if (key == "relative_gap") c.options.limits.relative_gap = to_double(key, value);
    else if (key == "out") c.out_dir = value;
    else if (key == "trace") c.write_trace = to_bool(key, value);
    else if (key == "dump_dir") c.options.dump_dir = value;
    else throw ConfigError("unknown configuration key '" + key + "'");
}

void RunConfig::validate() const {
    auto positive = [](const char* what, double v) {
        if (!(v >= 1)) throw ConfigError(std::string(what) + " must be >= 1");
    };
    positive("cap_fmrc", options.cap_fmrc);
    positive("cap_fmbc", options.cap_fmbc);
    positive("cap_bmbc", options.cap_bmbc);
    positive("inner_cap", options.inner_cap);
    positive("threads", options.threads);
    positive("pwl_segments", options.penalty.segments);
    if (grid.steps_per_day < 1 || grid.steps_per_day > 24) throw ConfigError("cgd must be in 1..24");
    try {
        grid.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const PenaltyConfig& p = options.penalty;
    for (double v : {p.rho_theta, p.rho_flow, p.rho_p, p.nu})
        if (v < 0) throw ConfigError("penalty weights must be >= 0");
    if (!(options.epsilon > 0)) throw ConfigError("epsilon must be > 0");
    if (!(options.round_timeout > 0)) throw ConfigError("round_timeout must be > 0");
    if (!(kappa > 0)) throw ConfigError("kappa must be > 0");
    if (!profile_for(*this, grid.steps_per_day))
        throw ConfigError("no demand profile with " + std::to_string(grid.steps_per_day) + " factors");
    if (case_path.empty()) throw ConfigError("'case' is required");
    if (rld_path.empty()) throw ConfigError("'rld' is required");
}

RunConfig parse_config(std::string_view text, const std::string& base_dir) {
    RunConfig c;
    c.base_dir = base_dir;
    std::istringstream in{std::string(text)};
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(n) + ": expected key = value");
        apply_setting(c, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    fs::path dir = fs::path(path).parent_path();
    RunConfig c = parse_config(buf.str(), dir.empty() ? "." : dir.string());
    return c;
}

RunInput load_input(const RunConfig& config, int regions) {
    config.validate();
    RunInput in;
    try {
        NetworkCase c = load_case(resolve(config, config.case_path));
        if (regions == 1) {
            in.pc = single_region(c);
        } else if (regions > 1) {
            auto it = config.partitions.find(regions);
            in.pc = it != config.partitions.end() ? load_partition(resolve(config, it->second), c)
                                                  : auto_partition(c, regions);
        } else if (config.partition_path.empty()) {
            in.pc = single_region(c);
        } else {
            in.pc = load_partition(resolve(config, config.partition_path), c);
        }
        in.grid = config.grid;
        in.demand = expand_demand(c, config.grid, *profile_for(config, config.grid.steps_per_day));
        auto rld = load_rld_spec(resolve(config, config.rld_path));
        for (const Generator& g : c.generators) {
            auto it = rld.find(g.id);
            if (it == rld.end()) throw ConfigError("no residual life entry for generator " + std::to_string(g.id));
            in.omega.push_back(cost_curve(it->second, config.kappa, g.preventive_cost, g.failure_cost, config.grid.epochs));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return in;
}

// ---- artifacts ------------------------------------------------------------

void write_report(std::ostream& out, const RunReport& r, const std::string& mode) {
    auto line = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    out << kReportVersion << '\n';
    line("mode", mode);
    line("regions", std::to_string(r.solutions.size()));
    line("converged", flag(r.converged()));
    for (const PhaseReport& p : r.phases) {
        const std::string k = std::string("phase.") + to_string(p.mode) + ".";
        line(k + "converged", flag(p.converged));
        line(k + "rounds", std::to_string(p.rounds));
        line(k + "seconds", num(p.seconds));
        line(k + "ops", num(p.cost.operations));
        line(k + "cbm", num(p.cost.maintenance));
        line(k + "dc", num(p.cost.curtailment));
        line(k + "gross", num(p.cost.gross()));
        line(k + "penalty", num(p.cost.penalty));
        line(k + "pwl_error_bound", num(p.pwl_error_bound));
    }
    line("upper_bound", num(r.upper_bound));
    line("cost.ops", num(r.cost.operations));
    line("cost.cbm", num(r.cost.maintenance));
    line("cost.dc", num(r.cost.curtailment));
    line("cost.gross", num(r.cost.gross()));
    line("cost.penalty", num(r.cost.penalty));
    line("inner_cap_hits", std::to_string(r.inner_cap_hits));
    line("repairs", std::to_string(r.repairs));
    line("max_nodal_residual", num(r.max_nodal_residual));
    line("cardinality", flag(r.cardinality));
    line("messages", std::to_string(r.messages));
    std::size_t bytes = 0;
    if (r.trace)
        for (const std::string& m : r.trace->messages()) bytes += m.size();
    line("message_bytes", std::to_string(bytes));
    line("seconds", num(r.seconds));
}

std::map<std::string, std::string> parse_report(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kReportVersion) throw ConfigError("not a " + std::string(kReportVersion) + " file");
    std::map<std::string, std::string> out;
    while (std::getline(in, line)) {
        auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ConfigError("malformed report line '" + line + "'");
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

void write_metrics(std::ostream& out, const std::vector<RoundMetric>& metrics) {
    out << kMetricsHeader << '\n';
    for (const RoundMetric& m : metrics)
        out << to_string(m.phase) << ',' << m.round << ',' << m.region << ',' << num(m.primal) << ',' << num(m.dual)
            << ',' << (m.local ? 1 : 0) << ',' << num(m.objective) << ',' << m.inner_iterations << '\n';
}

std::vector<RoundMetric> parse_metrics(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) throw ConfigError("metrics header mismatch");
    std::vector<RoundMetric> out;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw ConfigError("malformed metrics row '" + line + "'");
        RoundMetric m;
        m.phase = to_enum<ModelMode>("phase", f[0], {{"FMRC", ModelMode::FMRC}, {"FMBC", ModelMode::FMBC}, {"BMBC", ModelMode::BMBC}});
        m.round = to_int("round", f[1]);
        m.region = to_int("region", f[2]);
        m.primal = to_double("primal", f[3]);
        m.dual = to_double("dual", f[4]);
        m.local = to_bool("local", f[5]);
        m.objective = to_double("objective", f[6]);
        m.inner_iterations = to_int("inner_iterations", f[7]);
        out.push_back(m);
    }
    return out;
}

void write_schedules(const std::string& dir, const RunReport& r) {
    std::ofstream ops(fs::path(dir) / "schedule.csv");
    ops << "generator,region,t,x,y\n";
    for (const GeneratorSchedule& s : r.schedules)
        for (std::size_t t = 0; t < s.x.size(); ++t)
            ops << s.id << ',' << s.region << ',' << t << ',' << num(s.x[t]) << ',' << num(s.y[t]) << '\n';
    std::ofstream mnt(fs::path(dir) / "maintenance.csv");
    mnt << "generator,region,epoch,z\n";
    for (const GeneratorSchedule& s : r.schedules)
        for (std::size_t m = 0; m < s.z.size(); ++m) mnt << s.id << ',' << s.region << ',' << m << ',' << s.z[m] << '\n';
}

void write_artifacts(const std::string& dir, const RunReport& r, const std::string& mode, bool trace) {
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "report.txt");
        write_report(out, r, mode);
    }
    {
        std::ofstream out(fs::path(dir) / "metrics.csv");
        write_metrics(out, r.metrics);
    }
    write_schedules(dir, r);
    if (trace && r.trace) {
        std::ofstream out(fs::path(dir) / "trace.log");
        for (const std::string& m : r.trace->messages()) out << frame_message(m);
        std::ofstream ev(fs::path(dir) / "trace_events.csv");
        ev << "time,region,round,phase,event\n";
        for (const TraceEvent& e : r.trace->events())
            ev << num(e.time) << ',' << e.region << ',' << e.round << ',' << e.phase << ',' << e.what << '\n';
    }
}

// ---- sweep ----------------------------------------------------------------

double optimality_gap(double decentralized, double centralized) {
    if (centralized == 0.0) throw RuntimeError("centralized gross is zero; the gap is undefined");
    return (decentralized - centralized) / centralized;
}

std::vector<SweepPoint> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<int>& values,
                                  bool parallel_points) {
    auto one = [&](std::size_t k) {
        SweepPoint pt;
        RunConfig c = base;
        int regions = 0;
        if (axis == SweepAxis::Cgd) {
            c.grid.steps_per_day = values[k];
            if (!profile_for(c, values[k])) c.profile = resample_profile(base.profile, values[k]);
        } else {
            regions = values[k];
        }
        pt.cgd = c.grid.steps_per_day;
        const std::string prefix = (fs::path(base.out_dir) / ("point_" + std::to_string(k))).string();
        try {
            RunInput in = load_input(c, regions);
            pt.regions = static_cast<int>(in.pc.regions.size());
            RunReport dec = run_algorithm(in, c.options);
            write_artifacts(prefix + "_decentralized", dec, "decentralized", c.write_trace);
            RunReport cen = centralized_benchmark(in, c.options);
            write_artifacts(prefix + "_centralized", cen, "centralized", c.write_trace);
            pt.gross_decentralized = dec.cost.gross();
            pt.gross_centralized = cen.cost.gross();
            pt.gap = optimality_gap(pt.gross_decentralized, pt.gross_centralized);
            pt.minutes_decentralized = dec.seconds / 60.0;
            pt.minutes_centralized = cen.seconds / 60.0;
            pt.converged = dec.converged() && cen.converged();
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.error = e.what();
        }
        return pt;
    };
    std::vector<SweepPoint> out(values.size());
    if (parallel_points) {
        std::vector<std::future<SweepPoint>> fut;
        for (std::size_t k = 0; k < values.size(); ++k) fut.push_back(std::async(std::launch::async, one, k));
        for (std::size_t k = 0; k < values.size(); ++k) out[k] = fut[k].get();
    } else {
        for (std::size_t k = 0; k < values.size(); ++k) out[k] = one(k);
    }
    return out;
}

void write_sweep(std::ostream& out, const std::vector<SweepPoint>& points) {
    out << "point,regions,cgd,status,converged,gross_decentralized,gross_centralized,gap_percent,"
           "minutes_decentralized,minutes_centralized,error\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
        const SweepPoint& p = points[k];
        std::string err = p.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << k << ',' << p.regions << ',' << p.cgd << ',' << (p.ok ? "ok" : "failed") << ','
            << (p.converged ? "true" : "false") << ',' << num(p.gross_decentralized) << ','
            << num(p.gross_centralized) << ',' << num(100.0 * p.gap) << ',' << num(p.minutes_decentralized) << ','
            << num(p.minutes_centralized) << ',' << err << '\n';
    }
}

}  // namespace cbmuc

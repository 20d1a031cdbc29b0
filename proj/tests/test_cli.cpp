#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbmuc/cli.hpp"
#include "fixtures.hpp"

using namespace cbmuc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("cbmuc_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig fixture3() { return load_config(fixture::data("fixture3/run.cfg")); }

}  // namespace

TEST_CASE("config: every key of a shipped file is understood") {
    for (const char* dir : {"fixture3", "fig1", "ieee30"}) {
        RunConfig c = load_config(fixture::data(std::string(dir) + "/run.cfg"));
        CHECK_NOTHROW(c.validate());
        CHECK(c.profile.size() == static_cast<std::size_t>(c.grid.steps_per_day));
    }
    RunConfig c = load_config(fixture::data("ieee30/run.cfg"));
    CHECK(c.grid.epochs == 12);
    CHECK(c.partitions.at(4) == "partition_4.txt");
}

TEST_CASE("config: values, comments and overrides") {
    RunConfig c = parse_config(
        "# comment\ncase = a.txt\nrld = r.txt  # trailing\nrho_theta = 50\npwl_encoding = epigraph\n"
        "transport = socket\nviolation = absolute\nprofile = 1, 2\ncgd = 2\nprofile_3 = 1,2,3\n",
        "/base");
    CHECK(c.case_path == "a.txt");
    CHECK(c.rld_path == "r.txt");
    CHECK(c.options.penalty.rho_theta == 50.0);
    CHECK(c.options.penalty.encoding == PwlEncoding::Epigraph);
    CHECK(c.options.transport == TransportKind::Socket);
    CHECK(c.options.violation == ViolationMode::Absolute);
    CHECK(c.profile == std::vector<double>{1.0, 2.0});
    CHECK(c.profiles.at(3) == std::vector<double>{1.0, 2.0, 3.0});
    apply_setting(c, "cap_bmbc", "7");
    CHECK(c.options.cap_bmbc == 7);
}

TEST_CASE("config: errors surface before any solve") {
    CHECK_THROWS_AS(parse_config("bogus = 1\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("case a.txt\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("epochs = three\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("abs_mode = maybe\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("transport = pigeon\n", "."), ConfigError);
    CHECK_THROWS_AS(parse_config("profile_3 = 1, 2\n", "."), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);

    RunConfig c = fixture3();
    c.options.cap_fmrc = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = fixture3();
    c.grid.steps_per_day = 25;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = fixture3();
    c.partition_path = "missing.txt";
    CHECK_THROWS_AS(load_input(c), ConfigError);
    c = fixture3();
    c.profile = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(load_input(c), ConfigError);
}

TEST_CASE("input: region override and per-cgd profiles") {
    RunConfig c = fixture3();
    CHECK(load_input(c).pc.regions.size() == 2);
    CHECK(load_input(c, 1).pc.regions.size() == 1);
    apply_setting(c, "profile_4", "0.5, 1, 1.5, 2");
    c.grid.steps_per_day = 4;
    RunInput in = load_input(c);
    const NetworkCase& net = in.pc.network;
    for (std::size_t b = 0; b < net.buses.size(); ++b)
        for (int t = 0; t < in.grid.steps(); ++t)
            CHECK(in.demand[b][t] == doctest::Approx(0.5 * (1 + t % 4) * net.buses[b].demand));
}

TEST_CASE("profile resampling: examples") {
    CHECK(resample_profile({0.8, 1.2}, 4) == std::vector<double>{0.8, 0.8, 1.2, 1.2});
    CHECK(resample_profile({0.8, 1.2}, 1) == std::vector<double>{0.8});
    CHECK(resample_profile({1, 2, 3, 4}, 2) == std::vector<double>{1, 3});
    CHECK(resample_profile({1, 2, 3}, 3) == std::vector<double>{1, 2, 3});
    CHECK_THROWS_AS(resample_profile({}, 2), ConfigError);
}

TEST_CASE("artifacts: report and metrics round trip, gross adds up") {
    RunConfig c = fixture3();
    RunReport r = run_algorithm(load_input(c), c.options);
    fs::path dir = scratch("artifacts");
    write_artifacts(dir.string(), r, "decentralized", true);

    auto rep = parse_report(slurp(dir / "report.txt"));
    CHECK(rep.at("mode") == "decentralized");
    CHECK(rep.at("converged") == "true");
    double ops = std::stod(rep.at("cost.ops")), cbm = std::stod(rep.at("cost.cbm")), dc = std::stod(rep.at("cost.dc"));
    double gross = std::stod(rep.at("cost.gross"));
    CHECK(std::abs(gross - (ops + cbm + dc)) <= 1e-6 * std::abs(gross));
    CHECK(std::stod(rep.at("cost.gross")) == r.cost.gross());

    auto metrics = parse_metrics(slurp(dir / "metrics.csv"));
    REQUIRE(metrics.size() == r.metrics.size());
    for (std::size_t k = 0; k < metrics.size(); ++k) {
        CHECK(metrics[k].phase == r.metrics[k].phase);
        CHECK(metrics[k].round == r.metrics[k].round);
        CHECK(metrics[k].region == r.metrics[k].region);
        CHECK(metrics[k].primal == r.metrics[k].primal);
        CHECK(metrics[k].dual == r.metrics[k].dual);
        CHECK(metrics[k].local == r.metrics[k].local);
        CHECK(metrics[k].objective == r.metrics[k].objective);
    }
    std::ostringstream again;
    write_metrics(again, metrics);
    CHECK(again.str() == slurp(dir / "metrics.csv"));

    CHECK(fs::exists(dir / "schedule.csv"));
    CHECK(fs::exists(dir / "maintenance.csv"));
    CHECK(fs::exists(dir / "trace.log"));
    CHECK_THROWS_AS(parse_report("cbmuc-report v0\n"), ConfigError);
    CHECK_THROWS_AS(parse_metrics("phase,round\n"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("determinism: the same configuration gives identical metrics bytes") {
    RunConfig c = load_config(fixture::data("fig1/run.cfg"));
    c.options.cap_fmrc = c.options.cap_fmbc = c.options.cap_bmbc = 5;
    fs::path a = scratch("det_a"), b = scratch("det_b");
    write_artifacts(a.string(), run_algorithm(load_input(c), c.options), "decentralized", false);
    write_artifacts(b.string(), run_algorithm(load_input(c), c.options), "decentralized", false);
    CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
    CHECK(slurp(a / "schedule.csv") == slurp(b / "schedule.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("sweep: one region gives a zero gap, a single point matches its run") {
    RunConfig c = fixture3();
    c.out_dir = scratch("sweep").string();
    auto pts = run_sweep(c, SweepAxis::Regions, {1}, false);
    REQUIRE(pts.size() == 1);
    REQUIRE(pts[0].ok);
    CHECK(pts[0].regions == 1);
    CHECK(pts[0].gap == 0.0);

    auto base = run_sweep(c, SweepAxis::Cgd, {c.grid.steps_per_day}, false);
    REQUIRE(base[0].ok);
    RunInput in = load_input(c);
    double dec = run_algorithm(in, c.options).cost.gross();
    double cen = centralized_benchmark(in, c.options).cost.gross();
    CHECK(base[0].gross_decentralized == dec);
    CHECK(base[0].gap == optimality_gap(dec, cen));

    // the table is recomputable from the per-point reports
    auto rd = parse_report(slurp(fs::path(c.out_dir) / "point_0_decentralized" / "report.txt"));
    auto rc = parse_report(slurp(fs::path(c.out_dir) / "point_0_centralized" / "report.txt"));
    CHECK(optimality_gap(std::stod(rd.at("cost.gross")), std::stod(rc.at("cost.gross"))) == base[0].gap);

    // a broken point is recorded and the sweep goes on
    auto mixed = run_sweep(c, SweepAxis::Regions, {1, 7}, false);
    CHECK(mixed[0].ok);
    CHECK_FALSE(mixed[1].ok);
    CHECK_FALSE(mixed[1].error.empty());
    std::ostringstream table;
    write_sweep(table, mixed);
    CHECK(table.str().find("failed") != std::string::npos);
    fs::remove_all(c.out_dir);
}

TEST_CASE("gap definition") {
    CHECK(optimality_gap(101.0, 100.0) == doctest::Approx(0.01));
    CHECK(optimality_gap(100.0, 100.0) == 0.0);
    CHECK_THROWS_AS(optimality_gap(1.0, 0.0), RuntimeError);
}

#pragma once

// Experiment configuration, run artifacts and the sweep harness behind the
// command line driver.

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cbmuc/case_model.hpp"
#include "cbmuc/runtime.hpp"

namespace cbmuc {

/// Bad configuration or unreadable input files; raised before any solve.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string base_dir = ".";  // relative paths resolve against this
    std::string case_path;
    std::string partition_path;  // empty = whole network as one region
    std::string rld_path;
    std::map<int, std::string> partitions;  // region count -> partition file
    TimeGrid grid;
    std::vector<double> profile{1.0};
    std::map<int, std::vector<double>> profiles;  // steps per day -> profile
    double kappa = 1.0;
    RunOptions options;
    std::string out_dir = "cbmuc_out";
    bool write_trace = false;

    /// Throws ConfigError when a cap, the grid or a penalty is out of range.
    void validate() const;
};

/// `key = value` lines; `#` starts a comment.
RunConfig parse_config(std::string_view text, const std::string& base_dir);
RunConfig load_config(const std::string& path);
/// Sets one key; throws ConfigError on an unknown key or a malformed value.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();
/// Factor of step s is profile[s * size / cgd]; used by the CGD sweep when no
/// `profile_<cgd>` is given.
std::vector<double> resample_profile(const std::vector<double>& profile, int cgd);

/// Reads the case, partition and residual life files. `regions` > 0 picks the
/// `partition_<n>` file (1 = single region, no file needed).
RunInput load_input(const RunConfig& config, int regions = 0);

// ---- artifacts ------------------------------------------------------------

inline constexpr const char* kReportVersion = "cbmuc-report v1";
inline constexpr const char* kMetricsHeader = "phase,round,region,primal,dual,local,objective,inner_iterations";

/// Structured text: a version line then `key = value` lines.
void write_report(std::ostream& out, const RunReport& report, const std::string& mode);
std::map<std::string, std::string> parse_report(std::string_view text);

/// Per-round residuals, one row per region and round. Holds no wall times so
/// repeated runs give identical bytes.
void write_metrics(std::ostream& out, const std::vector<RoundMetric>& metrics);
std::vector<RoundMetric> parse_metrics(std::string_view text);

/// x, y and z tables, one row per generator.
void write_schedules(const std::string& dir, const RunReport& report);

/// Writes report.txt, metrics.csv, the schedule tables and, when asked, the
/// message trace into `dir`.
void write_artifacts(const std::string& dir, const RunReport& report, const std::string& mode, bool trace);

// ---- sweep ----------------------------------------------------------------

enum class SweepAxis { Cgd, Regions };

struct SweepPoint {
    int regions = 0;
    int cgd = 0;
    bool ok = false;
    std::string error;
    double gross_decentralized = 0.0;
    double gross_centralized = 0.0;
    double gap = 0.0;  // (decentralized - centralized) / centralized
    double minutes_decentralized = 0.0;
    double minutes_centralized = 0.0;
    bool converged = false;
};

/// (decentralized - centralized) / centralized.
double optimality_gap(double decentralized, double centralized);

/// Runs decentralized and centralized for every value; a failing point is
/// recorded and the sweep goes on. Per-run artifacts land in
/// `<out>/point_<k>_{decentralized,centralized}`.
std::vector<SweepPoint> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<int>& values,
                                  bool parallel_points);
void write_sweep(std::ostream& out, const std::vector<SweepPoint>& points);

}  // namespace cbmuc

#pragma once

// Regional per-epoch model: the epoch's share of the regional objective plus
// its operating constraints, with quadratic consensus penalties encoded
// piecewise-linearly.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbmuc/case_model.hpp"
#include "cbmuc/consensus.hpp"
#include "cbmuc/milp.hpp"

namespace cbmuc {

class SubproblemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelMode { FMRC, FMBC, BMBC };
const char* to_string(ModelMode mode);

enum class PwlEncoding { Segments, Epigraph };

struct PenaltyConfig {
    double rho_theta = 200.0;
    double rho_flow = 1.0;
    double rho_p = 1.0;
    double nu = 1e4;  // curtailment, USD/MW
    int segments = 8;
    PwlEncoding encoding = PwlEncoding::Segments;
    bool abs_mode = false;
    double theta_halfwidth = 0.5;         // rad
    double flow_halfwidth = 0.5;          // fraction of line capacity
    double production_halfwidth = 0.1;    // fraction of regional capacity
    double angle_limit = 3.141592653589793;  // |theta| bound, rad
};

/// Everything one region agent is allowed to know.
struct RegionProblem {
    Region view;
    TimeGrid grid;
    std::vector<Generator> generators;     // local, same order as view.generators
    std::map<int, Line> lines;             // case line index -> line, for view.lines
    std::map<int, Series> demand;          // owned bus id -> per step
    std::vector<std::vector<double>> omega;  // per local generator, per epoch
    int reference_bus = -1;                // owned bus with the angle fixed to 0
    int region_count = 1;

    int steps() const { return grid.steps(); }
    double capacity() const;
    ConsensusTopology topology() const;
    /// p_bar starts at the owned demand, all other consensus values at 0.
    ConsensusState initial_consensus() const;
};

/// `omega[g]` is the cost curve of case generator g; `demand[i][t]` is per bus index.
RegionProblem make_region_problem(const PartitionedCase& pc, int region, const TimeGrid& grid,
                                  const std::vector<std::vector<double>>& demand,
                                  const std::vector<std::vector<double>>& omega);

/// Adds (rho/2)(v - center)^2 over the trust interval center + [lower, upper]
/// as K chords and returns the interpolation error bound rho/2 * h^2/4.
/// Outside the interval the outer chords continue linearly.
double encode_quadratic_penalty(milp::LinearModel& model, int column, double center, double rho,
                                double lower, double upper, int segments, PwlEncoding encoding,
                                const std::string& name);

/// Adds kappa*(v - center), or |kappa|*|v - center| in abs mode.
void encode_abs(milp::LinearModel& model, int column, double center, double kappa, bool abs_mode,
                const std::string& name);

struct EpochRequest {
    int epoch = 0;
    ModelMode mode = ModelMode::FMBC;
    std::vector<double> alpha;     // per local generator; empty = all zero
    std::vector<int> z_fixed;      // per local generator: -1 free, 0 or 1; empty = mode default
    bool alpha_term = true;        // false drops the alpha objective entirely
};

struct EpochModel {
    milp::LinearModel lp;
    int epoch = 0;
    int first_step = 0;
    int length = 0;
    ModelMode mode = ModelMode::FMBC;
    // column indices; [local generator][k] with t = first_step + k
    std::vector<std::vector<int>> x, y, start, stop;
    std::vector<int> z;
    std::map<int, std::vector<int>> theta;  // owned and foreign buses
    std::map<int, std::vector<int>> flow;   // lines of the region
    std::map<int, std::vector<int>> psi;    // owned buses
    std::vector<int> p;
    std::vector<double> omega;              // per local generator, this epoch
    std::vector<double> alpha;
    double alpha_offset = 0.0;              // sum of alpha / |M|
    double pwl_error_bound = 0.0;           // summed over penalty terms
};

/// Default z per mode: fixed to the cheapest epoch in FMRC/FMBC, free in BMBC.
std::vector<int> default_z(const RegionProblem& problem, const EpochRequest& request);

EpochModel build_epoch_model(const RegionProblem& problem, const ConsensusState& delta,
                             const EpochRequest& request, const PenaltyConfig& config);

struct CostParts {
    double operations = 0.0;   // c x + d y + startup + shutdown
    double maintenance = 0.0;  // omega z
    double curtailment = 0.0;  // nu psi
    double penalty = 0.0;      // consensus terms as encoded in the model
    double alpha = 0.0;        // alpha (1/|M| - z)
    double total() const { return operations + maintenance + curtailment + penalty + alpha; }
};

/// Solution values over one epoch, indexed like EpochModel.
struct EpochSlice {
    int epoch = 0;
    int first_step = 0;
    int length = 0;
    std::vector<std::vector<double>> x, y, start, stop;
    std::vector<int> z;
    std::map<int, Series> theta, flow, psi;
    Series p;
    CostParts parts;
    double objective = 0.0;
};

EpochSlice extract_solution(const EpochModel& model, const milp::SolveResult& result,
                            double integrality_tolerance = 1e-6);

/// Solves the model (MILP unless every integer is relaxed); throws on failure.
EpochSlice solve_epoch(const EpochModel& model, const milp::Limits& limits = {});

/// Full-horizon regional solution stitched from epoch slices.
struct RegionSolution {
    std::vector<std::vector<double>> x, y, start, stop;  // [local generator][t]
    std::vector<std::vector<int>> z;                      // [local generator][m]
    std::map<int, Series> theta, flow, psi;
    Series p;
    CostParts parts;

    void resize(const RegionProblem& problem);
    void store(const EpochSlice& slice);
};

/// The regional objective with exact quadratic penalties, over the whole
/// horizon or a single epoch (epoch >= 0).
CostParts exact_objective(const RegionProblem& problem, const ConsensusState& delta,
                          const RegionSolution& solution, const std::vector<double>& alpha,
                          const PenaltyConfig& config, int epoch = -1);

/// All epochs of a region in one model.
struct RegionModel {
    milp::LinearModel lp;
    std::vector<EpochModel> epochs;  // column indices local to each epoch
    std::vector<int> offsets;        // first column of each epoch in `lp`
};

/// Stacks the epoch models (alpha omitted), optionally adding the
/// exactly-once maintenance rows. Used as the monolithic reference.
RegionModel build_region_model(const RegionProblem& problem, const ConsensusState& delta, ModelMode mode,
                               const PenaltyConfig& config, bool cardinality);
RegionSolution extract_region(const RegionProblem& problem, const RegionModel& model,
                              const milp::SolveResult& result);

/// Regional production minus net demand, per step: sum y + sum psi - sum demand.
Series net_injection(const RegionProblem& problem, const RegionSolution& solution);

/// Largest nodal balance residual of a solution at owned buses.
double nodal_residual(const RegionProblem& problem, const RegionSolution& solution);

}  // namespace cbmuc

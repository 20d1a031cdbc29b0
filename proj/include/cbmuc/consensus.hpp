#pragma once

// Consensus state of one region and the per-round averaging / multiplier
// algebra shared by all regions.

#include <map>
#include <stdexcept>
#include <vector>

namespace cbmuc {

using Series = std::vector<double>;  // one value per operational step

class ConsensusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConsensusParams {
    double rho_theta = 200.0;
    double rho_flow = 1.0;
    double rho_p = 1.0;
    double epsilon = 1e-2;  // MW, max-norm on tie-line flows
};

struct ConsensusState {
    std::map<int, Series> theta_bar;  // shared bus id -> rad
    std::map<int, Series> lambda;
    std::map<int, Series> flow_bar;   // tie line index -> MW
    std::map<int, Series> phi;
    std::map<int, Series> flow_bar_prev;
    bool has_previous = false;
    Series p_bar;
    Series eta;
    int rounds = 0;  // consensus updates applied so far

    static ConsensusState initial(const std::vector<int>& shared_buses, const std::vector<int>& tie_lines,
                                  const Series& initial_target);
    void validate(const std::vector<int>& shared_buses, const std::vector<int>& tie_lines,
                  int steps) const;
};

// Scalar updates, one step at a time.
double intermediate_theta(double local, const std::vector<double>& neighbor_estimates);
/// Flow on u->v averaged over the local and the co-owner's angle pair.
double intermediate_flow(double susceptance, double local_u, double local_v, double neighbor_u,
                         double neighbor_v);
double update_lambda(double lambda, double theta, double theta_bar, double rho_theta);
double update_phi(double phi, double flow, double flow_bar, double rho_flow);
double update_eta(double eta, double p, double p_bar, double rho_p);
/// |sum(demand - curtailment) - production|
double local_violation(double net_demand, double production);
double production_target(double production, const std::vector<double>& violations);
/// Max-norm primal (f vs f_bar) and dual (f_bar vs previous) tests.
bool check_local_convergence(const std::map<int, Series>& flow, const std::map<int, Series>& flow_bar,
                             const std::map<int, Series>& flow_bar_prev, double epsilon);
double max_deviation(const std::map<int, Series>& a, const std::map<int, Series>& b);
/// Global flag: every region reported local convergence.
bool all_converged(const std::map<int, bool>& local_flags, int region_count);

/// What a region knows about its consensus neighbourhood.
struct ConsensusTopology {
    struct Tie {
        int line = 0;       // case line index
        int from = 0;       // bus ids in case orientation
        int to = 0;
        double susceptance = 0.0;
        int co_owner = 0;   // the other region carrying the line
    };
    int region = 0;
    int region_count = 1;
    std::map<int, std::vector<int>> bus_neighbors;  // shared bus -> region ids
    std::vector<Tie> ties;

    std::vector<int> shared_buses() const;
    std::vector<int> tie_lines() const;
};

/// The region's own solution values that enter a consensus round.
struct LocalEstimates {
    std::map<int, Series> theta;  // shared buses
    std::map<int, Series> flow;   // tie lines
    Series production;            // p = sum of local y
    Series violation;             // local violation per step
};

struct RoundOutcome {
    bool local_converged = false;
    double primal_residual = 0.0;  // max |f - f_bar|
    double dual_residual = 0.0;    // max |f_bar - f_bar_prev|, 0 before a previous exists
};

/// Applies one consensus round: averaging of angles and flows, multiplier
/// updates, production target and convergence test. `neighbor_theta` maps a
/// region id to the angle estimates it sent; `violations` holds one series per
/// region including this one.
RoundOutcome apply_round(ConsensusState& state, const ConsensusTopology& topo,
                         const LocalEstimates& local,
                         const std::map<int, std::map<int, Series>>& neighbor_theta,
                         const std::map<int, Series>& violations, const ConsensusParams& params);

}  // namespace cbmuc

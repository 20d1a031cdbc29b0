#include "cbmuc/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cbmuc {

ConsensusState ConsensusState::initial(const std::vector<int>& shared_buses,
                                       const std::vector<int>& tie_lines, const Series& initial_target) {
    ConsensusState s;
    const std::size_t n = initial_target.size();
    for (int b : shared_buses) {
        s.theta_bar[b] = Series(n, 0.0);
        s.lambda[b] = Series(n, 0.0);
    }
    for (int l : tie_lines) {
        s.flow_bar[l] = Series(n, 0.0);
        s.phi[l] = Series(n, 0.0);
    }
    s.p_bar = initial_target;
    s.eta = Series(n, 0.0);
    return s;
}

void ConsensusState::validate(const std::vector<int>& shared_buses, const std::vector<int>& tie_lines,
                              int steps) const {
    auto check = [&](const std::map<int, Series>& m, const std::vector<int>& keys, const char* what) {
        if (m.size() != keys.size()) throw ConsensusError(std::string("consensus ") + what + " has the wrong index set");
        for (int k : keys) {
            auto it = m.find(k);
            if (it == m.end())
                throw ConsensusError(std::string("missing consensus ") + what + " entry " + std::to_string(k));
            if (static_cast<int>(it->second.size()) != steps)
                throw ConsensusError(std::string("consensus ") + what + " entry has the wrong length");
            for (double v : it->second)
                if (!std::isfinite(v)) throw ConsensusError(std::string("non-finite consensus ") + what);
        }
    };
    check(theta_bar, shared_buses, "angle");
    check(lambda, shared_buses, "angle multiplier");
    check(flow_bar, tie_lines, "flow");
    check(phi, tie_lines, "flow multiplier");
    if (static_cast<int>(p_bar.size()) != steps || static_cast<int>(eta.size()) != steps)
        throw ConsensusError("production target has the wrong length");
}

double intermediate_theta(double local, const std::vector<double>& neighbor_estimates) {
    double sum = local;
    for (double v : neighbor_estimates) sum += v;
    return sum / static_cast<double>(neighbor_estimates.size() + 1);
}

double intermediate_flow(double susceptance, double local_u, double local_v, double neighbor_u,
                         double neighbor_v) {
    return (susceptance * (neighbor_u - neighbor_v) + susceptance * (local_u - local_v)) / 2.0;
}

double update_lambda(double lambda, double theta, double theta_bar, double rho_theta) {
    return lambda + rho_theta * (theta - theta_bar);
}

double update_phi(double phi, double flow, double flow_bar, double rho_flow) {
    return phi + rho_flow * (flow - flow_bar);
}

double update_eta(double eta, double p, double p_bar, double rho_p) {
    return eta + rho_p * (p - p_bar);
}

double local_violation(double net_demand, double production) { return std::abs(net_demand - production); }

double production_target(double production, const std::vector<double>& violations) {
    if (violations.empty()) throw ConsensusError("production target needs at least one violation share");
    double sum = 0.0;
    for (double v : violations) sum += v;
    return production + sum / static_cast<double>(violations.size());
}

double max_deviation(const std::map<int, Series>& a, const std::map<int, Series>& b) {
    double worst = 0.0;
    for (const auto& [k, sa] : a) {
        auto it = b.find(k);
        if (it == b.end()) throw ConsensusError("flow series " + std::to_string(k) + " has no counterpart");
        for (std::size_t t = 0; t < sa.size(); ++t) worst = std::max(worst, std::abs(sa[t] - it->second.at(t)));
    }
    return worst;
}

bool check_local_convergence(const std::map<int, Series>& flow, const std::map<int, Series>& flow_bar,
                             const std::map<int, Series>& flow_bar_prev, double epsilon) {
    return max_deviation(flow, flow_bar) < epsilon && max_deviation(flow_bar, flow_bar_prev) < epsilon;
}

bool all_converged(const std::map<int, bool>& local_flags, int region_count) {
    if (static_cast<int>(local_flags.size()) != region_count) return false;
    for (const auto& [r, flag] : local_flags)
        if (!flag) return false;
    return true;
}

std::vector<int> ConsensusTopology::shared_buses() const {
    std::vector<int> out;
    for (const auto& [b, who] : bus_neighbors) out.push_back(b);
    return out;
}

std::vector<int> ConsensusTopology::tie_lines() const {
    std::vector<int> out;
    for (const Tie& t : ties) out.push_back(t.line);
    return out;
}

RoundOutcome apply_round(ConsensusState& state, const ConsensusTopology& topo, const LocalEstimates& local,
                         const std::map<int, std::map<int, Series>>& neighbor_theta,
                         const std::map<int, Series>& violations, const ConsensusParams& params) {
    const std::size_t steps = local.production.size();
    auto estimate = [&](int region, int bus) -> const Series& {
        auto r = neighbor_theta.find(region);
        if (r == neighbor_theta.end())
            throw ConsensusError("no angle share from region " + std::to_string(region));
        auto b = r->second.find(bus);
        if (b == r->second.end())
            throw ConsensusError("region " + std::to_string(region) + " sent no estimate for bus " +
                                 std::to_string(bus));
        if (b->second.size() != steps) throw ConsensusError("angle share has the wrong length");
        return b->second;
    };

    for (const auto& [bus, who] : topo.bus_neighbors) {
        const Series& mine = local.theta.at(bus);
        Series& bar = state.theta_bar.at(bus);
        Series& lam = state.lambda.at(bus);
        std::vector<double> est(who.size());
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t k = 0; k < who.size(); ++k) est[k] = estimate(who[k], bus)[t];
            bar[t] = intermediate_theta(mine[t], est);
            lam[t] = update_lambda(lam[t], mine[t], bar[t], params.rho_theta);
        }
    }

    std::map<int, Series> previous = state.flow_bar;
    for (const auto& tie : topo.ties) {
        const Series& nu = estimate(tie.co_owner, tie.from);
        const Series& nv = estimate(tie.co_owner, tie.to);
        const Series& lu = local.theta.at(tie.from);
        const Series& lv = local.theta.at(tie.to);
        const Series& f = local.flow.at(tie.line);
        Series& bar = state.flow_bar.at(tie.line);
        Series& ph = state.phi.at(tie.line);
        for (std::size_t t = 0; t < steps; ++t) {
            bar[t] = intermediate_flow(tie.susceptance, lu[t], lv[t], nu[t], nv[t]);
            ph[t] = update_phi(ph[t], f[t], bar[t], params.rho_flow);
        }
    }

    if (static_cast<int>(violations.size()) != topo.region_count)
        throw ConsensusError("expected " + std::to_string(topo.region_count) + " violation shares, got " +
                             std::to_string(violations.size()));
    std::vector<double> v(violations.size());
    for (std::size_t t = 0; t < steps; ++t) {
        std::size_t k = 0;
        for (const auto& [r, series] : violations) v[k++] = series.at(t);
        state.p_bar[t] = production_target(local.production[t], v);
        state.eta[t] = update_eta(state.eta[t], local.production[t], state.p_bar[t], params.rho_p);
    }

    RoundOutcome out;
    out.primal_residual = max_deviation(local.flow, state.flow_bar);
    if (state.has_previous) {
        out.dual_residual = max_deviation(state.flow_bar, previous);
        out.local_converged = out.primal_residual < params.epsilon && out.dual_residual < params.epsilon;
    }
    state.flow_bar_prev = std::move(previous);
    state.has_previous = true;
    ++state.rounds;
    return out;
}

}  // namespace cbmuc

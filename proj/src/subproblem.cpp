#include "cbmuc/subproblem.hpp"

#include <algorithm>
#include <cmath>

#include "cbmuc/degradation.hpp"

namespace cbmuc {

using milp::kInf;
using milp::LinearModel;
using milp::Sense;

namespace {

std::string tag(const char* prefix, int a, const char* mid, int b) {
    return std::string(prefix) + std::to_string(a) + mid + std::to_string(b);
}

double square(double v) { return v * v; }

}  // namespace

const char* to_string(ModelMode mode) {
    switch (mode) {
    case ModelMode::FMRC: return "FMRC";
    case ModelMode::FMBC: return "FMBC";
    case ModelMode::BMBC: return "BMBC";
    }
    return "?";
}

double RegionProblem::capacity() const {
    double cap = 0.0;
    for (const Generator& g : generators) cap += g.pmax;
    return cap;
}

ConsensusTopology RegionProblem::topology() const {
    ConsensusTopology topo;
    topo.region = view.id;
    topo.region_count = region_count;
    topo.bus_neighbors = view.bus_neighbors;
    for (int k : view.tie_lines) {
        const Line& l = lines.at(k);
        int far = view.owns(l.from) ? l.to : l.from;
        topo.ties.push_back({k, l.from, l.to, l.susceptance, view.bus_neighbors.at(far).at(0)});
    }
    return topo;
}

ConsensusState RegionProblem::initial_consensus() const {
    Series target(steps(), 0.0);
    for (const auto& [bus, d] : demand)
        for (int t = 0; t < steps(); ++t) target[t] += d[t];
    return ConsensusState::initial(view.shared(), view.tie_lines, target);
}

RegionProblem make_region_problem(const PartitionedCase& pc, int region, const TimeGrid& grid,
                                  const std::vector<std::vector<double>>& demand,
                                  const std::vector<std::vector<double>>& omega) {
    const NetworkCase& net = pc.network;
    RegionProblem rp;
    rp.view = pc.region(region);
    rp.grid = grid;
    rp.region_count = static_cast<int>(pc.regions.size());
    for (int g : rp.view.generators) {
        rp.generators.push_back(net.generators.at(g));
        if (static_cast<int>(omega.at(g).size()) != grid.epochs)
            throw SubproblemError("cost curve of generator " + std::to_string(net.generators[g].id) +
                                  " does not cover every epoch");
        rp.omega.push_back(omega[g]);
    }
    for (int k : rp.view.lines) rp.lines[k] = net.lines.at(k);
    for (int b : rp.view.owned()) {
        const Series& d = demand.at(net.bus_index(b));
        if (static_cast<int>(d.size()) != grid.steps())
            throw SubproblemError("demand of bus " + std::to_string(b) + " does not cover the horizon");
        rp.demand[b] = d;
    }
    int ref = net.buses.front().id;
    for (const Bus& b : net.buses) ref = std::min(ref, b.id);
    if (rp.view.owns(ref)) rp.reference_bus = ref;
    return rp;
}

double encode_quadratic_penalty(LinearModel& model, int column, double center, double rho, double lower,
                                double upper, int segments, PwlEncoding encoding, const std::string& name) {
    if (!(lower < upper)) throw SubproblemError("penalty " + name + ": empty trust interval");
    if (segments < 1) throw SubproblemError("penalty " + name + ": need at least one segment");
    if (rho < 0) throw SubproblemError("penalty " + name + ": negative coefficient");
    if (rho == 0) return 0.0;
    const double h = (upper - lower) / segments;
    auto q = [&](double d) { return 0.5 * rho * d * d; };
    auto slope = [&](int k) { return 0.5 * rho * (2.0 * lower + (2.0 * k + 1.0) * h); };

    if (encoding == PwlEncoding::Segments) {
        std::vector<std::pair<int, double>> terms{{column, 1.0}};
        for (int k = 0; k < segments; ++k)
            terms.emplace_back(model.add_column(name + "_s" + std::to_string(k), 0.0, h, slope(k)), -1.0);
        terms.emplace_back(model.add_column(name + "_lo", 0.0, kInf, -slope(0)), 1.0);
        terms.emplace_back(model.add_column(name + "_hi", 0.0, kInf, slope(segments - 1)), -1.0);
        model.add_row(name + "_pwl", terms, Sense::Equal, center + lower);
        model.add_objective_offset(q(lower));
    } else {
        int e = model.add_column(name + "_epi", -kInf, kInf, 1.0);
        for (int k = 0; k < segments; ++k) {
            double b = lower + k * h;
            double s = slope(k);
            model.add_row(name + "_chord" + std::to_string(k), {{e, 1.0}, {column, -s}}, Sense::GreaterEqual,
                          q(b) - s * (b + center));
        }
    }
    return rho * h * h / 8.0;
}

void encode_abs(LinearModel& model, int column, double center, double kappa, bool abs_mode,
                const std::string& name) {
    if (kappa == 0.0) return;
    if (!abs_mode) {
        model.column(column).cost += kappa;
        model.add_objective_offset(-kappa * center);
        return;
    }
    int sp = model.add_column(name + "_pos", 0.0, kInf, std::abs(kappa));
    int sn = model.add_column(name + "_neg", 0.0, kInf, std::abs(kappa));
    model.add_row(name + "_split", {{column, 1.0}, {sp, -1.0}, {sn, 1.0}}, Sense::Equal, center);
}

std::vector<int> default_z(const RegionProblem& problem, const EpochRequest& request) {
    std::vector<int> z(problem.generators.size(), -1);
    if (request.mode == ModelMode::BMBC) return z;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = argmin_epoch(problem.omega[i]) == request.epoch ? 1 : 0;
    return z;
}

EpochModel build_epoch_model(const RegionProblem& problem, const ConsensusState& delta,
                             const EpochRequest& request, const PenaltyConfig& config) {
    const TimeGrid& grid = problem.grid;
    const Region& view = problem.view;
    const int m = request.epoch;
    const std::size_t n = problem.generators.size();
    if (m < 0 || m >= grid.epochs) throw SubproblemError("epoch " + std::to_string(m) + " out of range");
    try {
        delta.validate(view.shared(), view.tie_lines, problem.steps());
    } catch (const ConsensusError& e) {
        throw SubproblemError(std::string("region ") + std::to_string(view.id) + ": " + e.what());
    }
    if (!request.alpha.empty() && request.alpha.size() != n)
        throw SubproblemError("alpha must have one entry per local generator");
    std::vector<int> zfix = request.z_fixed.empty() ? default_z(problem, request) : request.z_fixed;
    if (zfix.size() != n) throw SubproblemError("z override must have one entry per local generator");

    EpochModel em;
    em.epoch = m;
    em.mode = request.mode;
    em.first_step = grid.epoch_begin(m);
    em.length = grid.epoch_length();
    LinearModel& lp = em.lp;
    const int t0 = em.first_step;
    const int len = em.length;
    const bool relax = request.mode == ModelMode::FMRC;
    const double inv_epochs = 1.0 / grid.epochs;

    em.x.resize(n);
    em.y.resize(n);
    em.start.resize(n);
    em.stop.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Generator& g = problem.generators[i];
        double a = request.alpha.empty() || !request.alpha_term ? 0.0 : request.alpha[i];
        em.omega.push_back(problem.omega[i][m]);
        em.alpha.push_back(a);
        double zl = zfix[i] < 0 ? 0.0 : zfix[i], zu = zfix[i] < 0 ? 1.0 : zfix[i];
        em.z.push_back(lp.add_column(tag("z_g", g.id, "_m", m), zl, zu, problem.omega[i][m] - a, !relax));
        lp.add_objective_offset(a * inv_epochs);
        em.alpha_offset += a * inv_epochs;
        for (int k = 0; k < len; ++k) {
            const int t = t0 + k;
            double xl = 0.0, xu = 1.0;
            if (t < g.init_hold) {
                xl = xu = g.init_status;
                if (g.init_status == 1 && zl == 1.0)
                    throw SubproblemError("generator " + std::to_string(g.id) +
                                          " is held on but fixed under maintenance in epoch " + std::to_string(m));
            }
            em.x[i].push_back(lp.add_column(tag("x_g", g.id, "_t", t), xl, xu, g.commit_cost, !relax));
            em.y[i].push_back(lp.add_column(tag("y_g", g.id, "_t", t), 0.0, g.pmax, g.dispatch_cost));
            em.start[i].push_back(lp.add_column(tag("su_g", g.id, "_t", t), 0.0, 1.0, g.startup_cost));
            em.stop[i].push_back(lp.add_column(tag("sd_g", g.id, "_t", t), 0.0, 1.0, g.shutdown_cost));
        }
        const auto& x = em.x[i];
        const auto& y = em.y[i];
        const auto& su = em.start[i];
        const auto& sd = em.stop[i];
        for (int k = 0; k < len; ++k) {
            const int t = t0 + k;
            const std::string s = tag("_g", g.id, "_t", t);
            lp.add_row("out" + s, {{x[k], 1.0}, {em.z[i], 1.0}}, Sense::LessEqual, 1.0);
            lp.add_row("pmin" + s, {{y[k], 1.0}, {x[k], -g.pmin}}, Sense::GreaterEqual, 0.0);
            lp.add_row("pmax" + s, {{y[k], 1.0}, {x[k], -g.pmax}}, Sense::LessEqual, 0.0);
            if (k > 0) {
                lp.add_row("up" + s, {{x[k], 1.0}, {x[k - 1], -1.0}, {su[k], -1.0}}, Sense::LessEqual, 0.0);
                lp.add_row("dn" + s, {{x[k], 1.0}, {x[k - 1], -1.0}, {sd[k], 1.0}}, Sense::GreaterEqual, 0.0);
                lp.add_row("rup" + s, {{y[k], 1.0}, {y[k - 1], -1.0}}, Sense::LessEqual, g.ramp);
                lp.add_row("rdn" + s, {{y[k], 1.0}, {y[k - 1], -1.0}}, Sense::GreaterEqual, -g.ramp);
            } else if (t == 0) {
                lp.add_row("up" + s, {{x[k], 1.0}, {su[k], -1.0}}, Sense::LessEqual, g.init_status);
                lp.add_row("dn" + s, {{x[k], 1.0}, {sd[k], 1.0}}, Sense::GreaterEqual, g.init_status);
                if (g.init_status == 0) lp.add_row("rup" + s, {{y[k], 1.0}}, Sense::LessEqual, g.ramp);
            }
            std::vector<std::pair<int, double>> win{{x[k], -1.0}};
            for (int j = std::max(0, k - g.min_up + 1); j <= k; ++j) win.emplace_back(su[j], 1.0);
            lp.add_row("minup" + s, win, Sense::LessEqual, 0.0);
            win.assign({{x[k], 1.0}});
            for (int j = std::max(0, k - g.min_down + 1); j <= k; ++j) win.emplace_back(sd[j], 1.0);
            lp.add_row("mindn" + s, win, Sense::LessEqual, 1.0);
        }
    }

    std::vector<int> angle_buses = view.owned();
    angle_buses.insert(angle_buses.end(), view.foreign.begin(), view.foreign.end());
    std::sort(angle_buses.begin(), angle_buses.end());
    for (int b : angle_buses)
        for (int k = 0; k < len; ++k) {
            bool ref = b == problem.reference_bus;
            double lim = ref ? 0.0 : config.angle_limit;
            em.theta[b].push_back(lp.add_column(tag("th_b", b, "_t", t0 + k), -lim, lim, 0.0));
        }
    for (const auto& [idx, l] : problem.lines)
        for (int k = 0; k < len; ++k) {
            int f = lp.add_column(tag("f_l", idx, "_t", t0 + k), -l.capacity, l.capacity, 0.0);
            em.flow[idx].push_back(f);
            lp.add_row(tag("dc_l", idx, "_t", t0 + k),
                       {{f, 1.0}, {em.theta.at(l.from)[k], -l.susceptance}, {em.theta.at(l.to)[k], l.susceptance}},
                       Sense::Equal, 0.0);
        }
    for (const auto& [b, d] : problem.demand)
        for (int k = 0; k < len; ++k) {
            const int t = t0 + k;
            int psi = lp.add_column(tag("psi_b", b, "_t", t), 0.0, std::max(0.0, d[t]), config.nu);
            em.psi[b].push_back(psi);
            std::vector<std::pair<int, double>> terms{{psi, 1.0}};
            for (std::size_t i = 0; i < n; ++i)
                if (problem.generators[i].bus == b) terms.emplace_back(em.y[i][k], 1.0);
            for (const auto& [idx, l] : problem.lines) {
                if (l.from == b) terms.emplace_back(em.flow[idx][k], -1.0);
                if (l.to == b) terms.emplace_back(em.flow[idx][k], 1.0);
            }
            lp.add_row(tag("bal_b", b, "_t", t), terms, Sense::Equal, d[t]);
        }
    for (int k = 0; k < len; ++k) {
        int p = lp.add_column("p_t" + std::to_string(t0 + k), -kInf, kInf, 0.0);
        em.p.push_back(p);
        std::vector<std::pair<int, double>> terms{{p, 1.0}};
        for (std::size_t i = 0; i < n; ++i) terms.emplace_back(em.y[i][k], -1.0);
        lp.add_row("prod_t" + std::to_string(t0 + k), terms, Sense::Equal, 0.0);
    }

    // consensus penalties
    const int K = config.segments;
    for (int b : view.shared())
        for (int k = 0; k < len; ++k) {
            const int t = t0 + k;
            const std::string nm = tag("pth_b", b, "_t", t);
            int col = em.theta.at(b)[k];
            double c = delta.theta_bar.at(b)[t];
            encode_abs(lp, col, c, delta.lambda.at(b)[t], config.abs_mode, nm);
            em.pwl_error_bound += encode_quadratic_penalty(lp, col, c, config.rho_theta, -config.theta_halfwidth,
                                                           config.theta_halfwidth, K, config.encoding, nm);
        }
    for (int idx : view.tie_lines) {
        double w = std::max(config.flow_halfwidth * problem.lines.at(idx).capacity, 1e-6);
        for (int k = 0; k < len; ++k) {
            const int t = t0 + k;
            const std::string nm = tag("pf_l", idx, "_t", t);
            int col = em.flow.at(idx)[k];
            double c = delta.flow_bar.at(idx)[t];
            encode_abs(lp, col, c, delta.phi.at(idx)[t], config.abs_mode, nm);
            em.pwl_error_bound +=
                encode_quadratic_penalty(lp, col, c, config.rho_flow, -w, w, K, config.encoding, nm);
        }
    }
    double wp = problem.capacity() > 0 ? config.production_halfwidth * problem.capacity() : 1.0;
    for (int k = 0; k < len; ++k) {
        const int t = t0 + k;
        const std::string nm = "pp_t" + std::to_string(t);
        encode_abs(lp, em.p[k], delta.p_bar[t], delta.eta[t], config.abs_mode, nm);
        em.pwl_error_bound +=
            encode_quadratic_penalty(lp, em.p[k], delta.p_bar[t], config.rho_p, -wp, wp, K, config.encoding, nm);
    }

    try {
        lp.validate();
    } catch (const milp::ModelError& e) {
        throw SubproblemError(std::string("invalid epoch model: ") + e.what());
    }
    return em;
}

EpochSlice extract_solution(const EpochModel& model, const milp::SolveResult& result, double tol) {
    if (!result.has_solution()) throw SubproblemError("no solution to extract");
    const auto& v = result.values;
    if (static_cast<int>(v.size()) != model.lp.num_columns())
        throw SubproblemError("solution does not match the model columns");
    auto integral = [&](int col) {
        double r = std::round(v[col]);
        if (std::abs(v[col] - r) > tol)
            throw SubproblemError("column " + model.lp.column(col).name + " is fractional");
        return r;
    };
    auto value = [&](int col) { return model.lp.column(col).integer ? integral(col) : v[col]; };

    EpochSlice s;
    s.epoch = model.epoch;
    s.first_step = model.first_step;
    s.length = model.length;
    const std::size_t n = model.z.size();
    s.x.resize(n);
    s.y.resize(n);
    s.start.resize(n);
    s.stop.resize(n);
    CostParts& parts = s.parts;
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < model.length; ++k) {
            double x = value(model.x[i][k]);
            s.x[i].push_back(x);
            s.y[i].push_back(v[model.y[i][k]]);
            s.start[i].push_back(v[model.start[i][k]]);
            s.stop[i].push_back(v[model.stop[i][k]]);
            for (int col : {model.x[i][k], model.y[i][k], model.start[i][k], model.stop[i][k]})
                parts.operations += model.lp.column(col).cost * v[col];
        }
        double z = integral(model.z[i]);
        s.z.push_back(static_cast<int>(z));
        parts.maintenance += model.omega[i] * v[model.z[i]];
    }
    for (const auto& [b, cols] : model.theta)
        for (int c : cols) s.theta[b].push_back(v[c]);
    for (const auto& [l, cols] : model.flow)
        for (int c : cols) s.flow[l].push_back(v[c]);
    for (const auto& [b, cols] : model.psi)
        for (int c : cols) {
            s.psi[b].push_back(v[c]);
            parts.curtailment += model.lp.column(c).cost * v[c];
        }
    for (int c : model.p) s.p.push_back(v[c]);

    s.objective = model.lp.evaluate(v);
    parts.alpha = model.alpha_offset;
    for (std::size_t i = 0; i < n; ++i) parts.alpha -= model.alpha[i] * v[model.z[i]];
    parts.penalty = s.objective - parts.operations - parts.maintenance - parts.curtailment - parts.alpha;
    return s;
}

EpochSlice solve_epoch(const EpochModel& model, const milp::Limits& limits) {
    milp::SolveResult r = model.lp.has_integers() ? milp::solve_milp(model.lp, {}, limits)
                                                  : milp::solve_lp(model.lp, {}, limits);
    bool usable = r.status == milp::Status::Optimal ||
                  (r.status == milp::Status::NodeLimit && r.has_solution());
    if (!usable)
        throw SubproblemError(std::string("epoch ") + std::to_string(model.epoch) + " " + to_string(model.mode) +
                              " solve failed: " + milp::to_string(r.status));
    return extract_solution(model, r);
}

void RegionSolution::resize(const RegionProblem& problem) {
    const int T = problem.steps();
    const std::size_t n = problem.generators.size();
    x.assign(n, std::vector<double>(T, 0.0));
    y = start = stop = x;
    z.assign(n, std::vector<int>(problem.grid.epochs, 0));
    theta.clear();
    flow.clear();
    psi.clear();
    for (int b : problem.view.owned()) theta[b] = Series(T, 0.0);
    for (int b : problem.view.foreign) theta[b] = Series(T, 0.0);
    for (const auto& [idx, l] : problem.lines) flow[idx] = Series(T, 0.0);
    for (const auto& [b, d] : problem.demand) psi[b] = Series(T, 0.0);
    p.assign(T, 0.0);
    parts = {};
}

void RegionSolution::store(const EpochSlice& s) {
    for (std::size_t i = 0; i < s.z.size(); ++i) {
        z.at(i).at(s.epoch) = s.z[i];
        for (int k = 0; k < s.length; ++k) {
            x[i].at(s.first_step + k) = s.x[i][k];
            y[i].at(s.first_step + k) = s.y[i][k];
            start[i].at(s.first_step + k) = s.start[i][k];
            stop[i].at(s.first_step + k) = s.stop[i][k];
        }
    }
    auto copy = [&](std::map<int, Series>& dst, const std::map<int, Series>& src) {
        for (const auto& [key, vals] : src)
            for (int k = 0; k < s.length; ++k) dst.at(key).at(s.first_step + k) = vals[k];
    };
    copy(theta, s.theta);
    copy(flow, s.flow);
    copy(psi, s.psi);
    for (int k = 0; k < s.length; ++k) p.at(s.first_step + k) = s.p[k];
}

CostParts exact_objective(const RegionProblem& problem, const ConsensusState& delta,
                          const RegionSolution& sol, const std::vector<double>& alpha,
                          const PenaltyConfig& config, int epoch) {
    const TimeGrid& grid = problem.grid;
    int t_begin = 0, t_end = problem.steps(), m_begin = 0, m_end = grid.epochs;
    if (epoch >= 0) {
        t_begin = grid.epoch_begin(epoch);
        t_end = t_begin + grid.epoch_length();
        m_begin = epoch;
        m_end = epoch + 1;
    }
    auto linear = [&](double kappa, double dev) {
        return config.abs_mode ? std::abs(kappa) * std::abs(dev) : kappa * dev;
    };
    CostParts c;
    for (std::size_t i = 0; i < problem.generators.size(); ++i) {
        const Generator& g = problem.generators[i];
        for (int t = t_begin; t < t_end; ++t)
            c.operations += g.commit_cost * sol.x[i][t] + g.dispatch_cost * sol.y[i][t] +
                            g.startup_cost * sol.start[i][t] + g.shutdown_cost * sol.stop[i][t];
        double a = alpha.empty() ? 0.0 : alpha.at(i);
        for (int m = m_begin; m < m_end; ++m) {
            c.maintenance += problem.omega[i][m] * sol.z[i][m];
            c.alpha += a * (1.0 / grid.epochs - sol.z[i][m]);
        }
    }
    for (const auto& [b, vals] : sol.psi)
        for (int t = t_begin; t < t_end; ++t) c.curtailment += config.nu * vals[t];
    for (int t = t_begin; t < t_end; ++t) {
        for (int b : problem.view.shared()) {
            double dev = sol.theta.at(b)[t] - delta.theta_bar.at(b)[t];
            c.penalty += linear(delta.lambda.at(b)[t], dev) + 0.5 * config.rho_theta * square(dev);
        }
        for (int l : problem.view.tie_lines) {
            double dev = sol.flow.at(l)[t] - delta.flow_bar.at(l)[t];
            c.penalty += linear(delta.phi.at(l)[t], dev) + 0.5 * config.rho_flow * square(dev);
        }
        double dev = sol.p[t] - delta.p_bar[t];
        c.penalty += linear(delta.eta[t], dev) + 0.5 * config.rho_p * square(dev);
    }
    return c;
}

RegionModel build_region_model(const RegionProblem& problem, const ConsensusState& delta, ModelMode mode,
                               const PenaltyConfig& config, bool cardinality) {
    RegionModel rm;
    for (int m = 0; m < problem.grid.epochs; ++m) {
        EpochRequest req;
        req.epoch = m;
        req.mode = mode;
        req.alpha_term = false;
        rm.epochs.push_back(build_epoch_model(problem, delta, req, config));
        const LinearModel& src = rm.epochs.back().lp;
        const int off = rm.lp.num_columns();
        rm.offsets.push_back(off);
        for (const milp::Column& c : src.columns()) rm.lp.add_column(c.name, c.lower, c.upper, c.cost, c.integer);
        for (const milp::Row& r : src.rows()) {
            std::vector<std::pair<int, double>> terms;
            for (std::size_t k = 0; k < r.cols.size(); ++k) terms.emplace_back(r.cols[k] + off, r.coefs[k]);
            rm.lp.add_row(r.name, terms, r.sense, r.rhs);
        }
        rm.lp.add_objective_offset(src.objective_offset());
    }
    if (cardinality)
        for (std::size_t i = 0; i < problem.generators.size(); ++i) {
            std::vector<std::pair<int, double>> terms;
            for (int m = 0; m < problem.grid.epochs; ++m) terms.emplace_back(rm.epochs[m].z[i] + rm.offsets[m], 1.0);
            rm.lp.add_row("once_g" + std::to_string(problem.generators[i].id), terms, Sense::Equal, 1.0);
        }
    return rm;
}

RegionSolution extract_region(const RegionProblem& problem, const RegionModel& model,
                              const milp::SolveResult& result) {
    if (!result.has_solution()) throw SubproblemError("no solution to extract");
    RegionSolution sol;
    sol.resize(problem);
    for (std::size_t m = 0; m < model.epochs.size(); ++m) {
        milp::SolveResult part;
        part.status = result.status;
        const int off = model.offsets[m];
        const int n = model.epochs[m].lp.num_columns();
        part.values.assign(result.values.begin() + off, result.values.begin() + off + n);
        EpochSlice s = extract_solution(model.epochs[m], part);
        sol.store(s);
        sol.parts.operations += s.parts.operations;
        sol.parts.maintenance += s.parts.maintenance;
        sol.parts.curtailment += s.parts.curtailment;
        sol.parts.penalty += s.parts.penalty;
        sol.parts.alpha += s.parts.alpha;
    }
    return sol;
}

Series net_injection(const RegionProblem& problem, const RegionSolution& sol) {
    Series out(problem.steps(), 0.0);
    for (int t = 0; t < problem.steps(); ++t) {
        for (const auto& y : sol.y) out[t] += y[t];
        for (const auto& [b, d] : problem.demand) out[t] += sol.psi.at(b)[t] - d[t];
    }
    return out;
}

double nodal_residual(const RegionProblem& problem, const RegionSolution& sol) {
    double worst = 0.0;
    for (const auto& [b, d] : problem.demand)
        for (int t = 0; t < problem.steps(); ++t) {
            double r = sol.psi.at(b)[t] - d[t];
            for (std::size_t i = 0; i < problem.generators.size(); ++i)
                if (problem.generators[i].bus == b) r += sol.y[i][t];
            for (const auto& [idx, l] : problem.lines) {
                double f = l.susceptance * (sol.theta.at(l.from)[t] - sol.theta.at(l.to)[t]);
                if (l.from == b) r -= f;
                if (l.to == b) r += f;
            }
            worst = std::max(worst, std::abs(r));
        }
    return worst;
}

}  // namespace cbmuc

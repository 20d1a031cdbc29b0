#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include "cbmuc/runtime.hpp"

namespace cbmuc {

// ---- per-region optimisation -----------------------------------------------

MtResult mt_opt(const RegionProblem& problem, const ConsensusState& delta, ModelMode mode,
                const std::vector<double>& alpha, const std::vector<std::vector<int>>& z_fixed,
                const PenaltyConfig& config, const milp::Limits& limits, WorkerPool* pool,
                const std::vector<int>& only, const MtResult* base, const std::string& dump_dir) {
    const int M = problem.grid.epochs;
    std::vector<int> epochs = only;
    if (epochs.empty())
        for (int m = 0; m < M; ++m) epochs.push_back(m);
    if (!only.empty() && !base) throw RuntimeError("a partial epoch solve needs a base solution");

    std::vector<EpochSlice> slices(epochs.size());
    std::vector<double> bounds(epochs.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t k = 0; k < epochs.size(); ++k)
        tasks.push_back([&, k] {
            EpochRequest req;
            req.epoch = epochs[k];
            req.mode = mode;
            req.alpha = alpha;
            if (!z_fixed.empty()) req.z_fixed = z_fixed.at(epochs[k]);
            EpochModel em;
            try {
                em = build_epoch_model(problem, delta, req, config);
                bounds[k] = em.pwl_error_bound;
                slices[k] = solve_epoch(em, limits);
            } catch (const SubproblemError& e) {
                std::string where;
                if (!dump_dir.empty() && em.lp.num_columns() > 0) {
                    where = dump_dir + "/region" + std::to_string(problem.view.id) + "_epoch" +
                            std::to_string(epochs[k]) + "_" + to_string(mode) + ".lp";
                    std::ofstream out(where);
                    milp::write_lp_format(out, em.lp);
                    where = " (model written to " + where + ")";
                }
                throw SolverFailure("region " + std::to_string(problem.view.id) + ": " + e.what() + where);
            }
        });
    if (pool) {
        pool->run_all(tasks);
    } else {
        for (auto& t : tasks) t();
    }

    MtResult res;
    if (base) {
        res = *base;
    } else {
        res.solution.resize(problem);
        res.epoch_objective.assign(M, 0.0);
        res.epoch_bound.assign(M, 0.0);
    }
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        res.solution.store(slices[k]);
        res.epoch_objective[epochs[k]] = slices[k].objective;
        res.epoch_bound[epochs[k]] = bounds[k];
    }
    res.objective = res.pwl_error_bound = 0.0;
    for (int m = 0; m < M; ++m) {
        res.objective += res.epoch_objective[m];
        res.pwl_error_bound += res.epoch_bound[m];
    }
    return res;
}

std::vector<int> maintenance_counts(const RegionSolution& solution) {
    std::vector<int> out;
    for (const auto& z : solution.z) {
        int n = 0;
        for (int v : z) n += v;
        out.push_back(n);
    }
    return out;
}

double dual_value(const RegionProblem& problem, const RegionSolution& solution) {
    double v = 0.0;
    for (std::size_t i = 0; i < problem.generators.size(); ++i) {
        const Generator& g = problem.generators[i];
        for (int t = 0; t < problem.steps(); ++t)
            v += g.commit_cost * solution.x[i][t] + g.dispatch_cost * solution.y[i][t];
        for (int m = 0; m < problem.grid.epochs; ++m) v += problem.omega[i][m] * solution.z[i][m];
    }
    return v;
}

double subgradient_step(double upper_bound, double value, const std::vector<int>& counts) {
    double denom = 0.0;
    for (int c : counts) denom += static_cast<double>((1 - c) * (1 - c));
    if (denom == 0.0) return 0.0;
    return std::abs(upper_bound - value) / denom;
}

void update_alpha(std::vector<double>& alpha, double step, const std::vector<int>& counts) {
    if (alpha.size() != counts.size()) throw RuntimeError("alpha and counts differ in size");
    for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] += step * (1 - counts[i]);
}

std::vector<std::vector<int>> repair_cardinality(const std::vector<std::vector<int>>& z,
                                                 const std::vector<std::vector<double>>& omega,
                                                 const std::vector<double>& alpha) {
    std::vector<std::vector<int>> out = z;
    for (std::size_t i = 0; i < z.size(); ++i) {
        int count = 0;
        for (int v : z[i]) count += v;
        if (count == 1) continue;
        const double a = alpha.empty() ? 0.0 : alpha[i];
        int best = -1;
        for (std::size_t m = 0; m < z[i].size(); ++m) {
            if (count > 1 && !z[i][m]) continue;
            if (best < 0 || omega[i][m] - a < omega[i][best] - a) best = static_cast<int>(m);
        }
        std::fill(out[i].begin(), out[i].end(), 0);
        out[i][best] = 1;
    }
    return out;
}

Series region_violation(const RegionProblem& problem, const RegionSolution& solution, bool signed_value) {
    Series inj = net_injection(problem, solution);
    for (double& v : inj) v = signed_value ? -v : local_violation(-v, 0.0);
    return inj;
}

// ---- agents ---------------------------------------------------------------

namespace {

std::string key(const char* prefix, int a, int b) {
    return std::string(prefix) + "." + std::to_string(a) + "." + std::to_string(b);
}

struct AgentOutput {
    std::vector<PhaseReport> phases;
    std::vector<RoundMetric> metrics;
    RegionSolution solution;
    double own_bound = 0.0;
    int inner_cap_hits = 0;
    int repairs = 0;
};

class Agent {
public:
    Agent(RegionProblem problem, const RunOptions& options, Transport* transport, Trace* trace, WorkerPool* pool)
        : problem_(std::move(problem)), options_(options), transport_(transport), trace_(trace), pool_(pool) {
        id_ = problem_.view.id;
        topo_ = problem_.topology();
        delta_ = problem_.initial_consensus();
        params_.rho_theta = options.penalty.rho_theta;
        params_.rho_flow = options.penalty.rho_flow;
        params_.rho_p = options.penalty.rho_p;
        params_.epsilon = options.epsilon;
        alpha_.assign(problem_.generators.size(), 0.0);
    }

    void set_regions(const std::vector<int>& all) {
        for (int r : all)
            if (r != id_) others_.push_back(r);
    }

    const AgentOutput& output() const { return out_; }

    void run() {
        fixed_phase(ModelMode::FMRC, options_.cap_fmrc);
        fixed_phase(ModelMode::FMBC, options_.cap_fmbc);
        upper_bound();
        subgradient_phase(options_.cap_bmbc);
        out_.solution = current_.solution;
    }

private:
    // Exchange of one outer round; returns the global convergence flag.
    bool communicate(ModelMode phase, int round, RoundMetric& metric) {
        const RegionSolution& sol = current_.solution;
        const std::string ph = to_string(phase);
        LocalEstimates est;
        for (int b : problem_.view.shared()) est.theta[b] = sol.theta.at(b);
        for (int l : problem_.view.tie_lines) est.flow[l] = sol.flow.at(l);
        est.production = sol.p;
        est.violation = region_violation(problem_, sol, options_.violation == ViolationMode::Signed);

        for (int r : problem_.view.neighbors) {
            Message m{round, ph, id_, r, MessageKind::ThetaShare, {}};
            for (const auto& [b, who] : problem_.view.bus_neighbors)
                if (std::count(who.begin(), who.end(), r))
                    for (int t = 0; t < problem_.steps(); ++t) m.rows.emplace_back(key("theta", b, t), est.theta.at(b)[t]);
            transport_->send(m);
        }
        for (int r : others_) {
            Message m{round, ph, id_, r, MessageKind::ViolationShare, {}};
            for (int t = 0; t < problem_.steps(); ++t) m.rows.emplace_back("viol." + std::to_string(t), est.violation[t]);
            transport_->send(m);
        }
        std::map<int, std::map<int, Series>> inbox;
        for (int r : problem_.view.neighbors) {
            Message m = transport_->receive(id_, r, MessageKind::ThetaShare, round);
            auto& dst = inbox[r];
            for (const auto& [k, v] : m.rows) {
                int b = 0, t = 0;
                if (std::sscanf(k.c_str(), "theta.%d.%d", &b, &t) != 2 || t < 0 || t >= problem_.steps())
                    throw RuntimeError("bad angle share row '" + k + "'");
                auto& series = dst[b];
                series.resize(problem_.steps(), 0.0);
                series[t] = v;
            }
        }
        std::map<int, Series> violations{{id_, est.violation}};
        for (int r : others_) {
            Message m = transport_->receive(id_, r, MessageKind::ViolationShare, round);
            Series v(problem_.steps(), 0.0);
            for (const auto& [k, val] : m.rows) {
                int t = 0;
                if (std::sscanf(k.c_str(), "viol.%d", &t) != 1 || t < 0 || t >= problem_.steps())
                    throw RuntimeError("bad violation share row '" + k + "'");
                v[t] = val;
            }
            violations[r] = v;
        }

        RoundOutcome outcome = apply_round(delta_, topo_, est, inbox, violations, params_);
        metric.primal = outcome.primal_residual;
        metric.dual = outcome.dual_residual;
        metric.local = outcome.local_converged;

        trace_->event(id_, round, ph, "end");
        for (int r : others_)
            transport_->send({round, ph, id_, r, MessageKind::ConvFlag, {{"flag", outcome.local_converged ? 1.0 : 0.0}}});
        std::map<int, bool> flags{{id_, outcome.local_converged}};
        for (int r : others_) {
            Message m = transport_->receive(id_, r, MessageKind::ConvFlag, round);
            if (m.rows.size() != 1 || m.rows[0].first != "flag") throw RuntimeError("bad convergence flag");
            flags[r] = m.rows[0].second != 0.0;
        }
        return all_converged(flags, static_cast<int>(others_.size()) + 1);
    }

    MtResult solve(ModelMode mode, const std::vector<double>& alpha) {
        return mt_opt(problem_, delta_, mode, alpha, {}, options_.penalty, options_.limits, pool_, {}, nullptr,
                      options_.dump_dir);
    }

    void finish_phase(PhaseReport& rep, const ConsensusState& used, std::chrono::steady_clock::time_point t0) {
        CostParts exact = exact_objective(problem_, used, current_.solution, {}, options_.penalty);
        rep.cost = {exact.operations, exact.maintenance, exact.curtailment, exact.penalty};
        rep.pwl_error_bound = current_.pwl_error_bound;
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out_.phases.push_back(rep);
    }

    // Fixed maintenance phases: alpha is zero and z is fixed at argmin omega.
    void fixed_phase(ModelMode mode, int cap) {
        auto t0 = std::chrono::steady_clock::now();
        PhaseReport rep;
        rep.mode = mode;
        std::vector<double> zero(problem_.generators.size(), 0.0);
        ConsensusState used = delta_;
        for (int k = 1; k <= cap; ++k) {
            const int round = ++round_;
            trace_->event(id_, round, to_string(mode), "begin");
            used = delta_;
            current_ = solve(mode, zero);
            RoundMetric metric{mode, round, id_, 0, 0, false, current_.objective, 1};
            bool omega = communicate(mode, round, metric);
            out_.metrics.push_back(metric);
            rep.rounds = k;
            if (omega) {
                rep.converged = true;
                break;
            }
        }
        finish_phase(rep, used, t0);
        if (mode == ModelMode::FMBC) fmbc_delta_ = used;
    }

    void upper_bound() {
        CostParts exact = exact_objective(problem_, fmbc_delta_, current_.solution, {}, options_.penalty);
        out_.own_bound = exact.total();
        lub_ = out_.own_bound;
        const int round = ++round_;
        for (int r : others_) transport_->send({round, "LUB", id_, r, MessageKind::UboundShare, {{"lub", out_.own_bound}}});
        for (int r : others_) {
            Message m = transport_->receive(id_, r, MessageKind::UboundShare, round);
            if (m.rows.size() != 1 || m.rows[0].first != "lub") throw RuntimeError("bad upper bound share");
            if (options_.lub_scope == LubScope::Global) lub_ += m.rows[0].second;
        }
    }

    // Subgradient search over alpha inside every outer round.
    void subgradient_phase(int cap) {
        auto t0 = std::chrono::steady_clock::now();
        PhaseReport rep;
        rep.mode = ModelMode::BMBC;
        ConsensusState used = delta_;
        for (int k = 1; k <= cap; ++k) {
            const int round = ++round_;
            trace_->event(id_, round, "BMBC", "begin");
            used = delta_;
            bool satisfied = false;
            int j = 0;
            for (; j < options_.inner_cap; ++j) {
                current_ = solve(ModelMode::BMBC, alpha_);
                std::vector<int> counts = maintenance_counts(current_.solution);
                satisfied = std::all_of(counts.begin(), counts.end(), [](int c) { return c == 1; });
                if (satisfied) break;
                double step = subgradient_step(lub_, dual_value(problem_, current_.solution), counts);
                update_alpha(alpha_, step, counts);
            }
            if (!satisfied) {
                ++out_.inner_cap_hits;
                repair();
            }
            RoundMetric metric{ModelMode::BMBC, round, id_, 0, 0, false, current_.objective, std::min(j + 1, options_.inner_cap)};
            bool omega = communicate(ModelMode::BMBC, round, metric);
            out_.metrics.push_back(metric);
            rep.rounds = k;
            if (omega) {
                rep.converged = true;
                break;
            }
        }
        finish_phase(rep, used, t0);
    }

    void repair() {
        const auto& z = current_.solution.z;
        auto fixed = repair_cardinality(z, problem_.omega, alpha_);
        const int M = problem_.grid.epochs;
        std::vector<int> affected;
        std::vector<std::vector<int>> zfix(M);
        for (int m = 0; m < M; ++m) {
            bool changed = false;
            for (std::size_t i = 0; i < z.size(); ++i) {
                zfix[m].push_back(fixed[i][m]);
                changed = changed || fixed[i][m] != z[i][m];
            }
            if (changed) affected.push_back(m);
        }
        if (affected.empty()) return;
        ++out_.repairs;
        current_ = mt_opt(problem_, delta_, ModelMode::BMBC, alpha_, zfix, options_.penalty, options_.limits, pool_,
                          affected, &current_, options_.dump_dir);
    }

    RegionProblem problem_;
    RunOptions options_;
    Transport* transport_;
    Trace* trace_;
    WorkerPool* pool_;
    int id_ = 0;
    std::vector<int> others_;
    ConsensusTopology topo_;
    ConsensusState delta_;
    ConsensusState fmbc_delta_;
    ConsensusParams params_;
    std::vector<double> alpha_;
    double lub_ = 0.0;
    int round_ = 0;
    MtResult current_;
    AgentOutput out_;
};

int phase_order(ModelMode m) { return static_cast<int>(m); }

}  // namespace

bool RunReport::converged() const {
    if (phases.size() != 3) return false;
    return std::all_of(phases.begin(), phases.end(), [](const PhaseReport& p) { return p.converged; });
}

RunReport run_algorithm(const RunInput& input, const RunOptions& options) {
    input.grid.validate();
    if (input.omega.size() != input.pc.network.generators.size())
        throw RuntimeError("one cost curve per generator is required");
    auto start = std::chrono::steady_clock::now();

    std::vector<int> ids;
    for (const Region& r : input.pc.regions) ids.push_back(r.id);
    RunReport report;
    report.trace = std::make_shared<Trace>();
    auto transport = make_transport(options.transport, ids, options.round_timeout, report.trace.get());
    WorkerPool pool(options.threads);

    std::vector<std::unique_ptr<Agent>> agents;
    for (int id : ids) {
        agents.push_back(std::make_unique<Agent>(make_region_problem(input.pc, id, input.grid, input.demand, input.omega),
                                                 options, transport.get(), report.trace.get(), &pool));
        agents.back()->set_regions(ids);
    }

    std::mutex err_mu;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    for (auto& a : agents)
        threads.emplace_back([&, agent = a.get()] {
            try {
                agent->run();
            } catch (const std::exception& e) {
                {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
                transport->abort(e.what());
            }
        });
    for (auto& t : threads) t.join();
    report.messages = transport->delivered();
    transport.reset();
    if (first_error) std::rethrow_exception(first_error);

    for (int p = 0; p < 3; ++p) {
        PhaseReport ph = agents[0]->output().phases.at(p);
        ph.cost = {};
        ph.pwl_error_bound = 0.0;
        for (const auto& a : agents) {
            const PhaseReport& q = a->output().phases.at(p);
            ph.converged = ph.converged && q.converged;
            ph.seconds = std::max(ph.seconds, q.seconds);
            ph.cost.operations += q.cost.operations;
            ph.cost.maintenance += q.cost.maintenance;
            ph.cost.curtailment += q.cost.curtailment;
            ph.cost.penalty += q.cost.penalty;
            ph.pwl_error_bound += q.pwl_error_bound;
        }
        report.phases.push_back(ph);
    }
    report.cost = report.phases[2].cost;

    const NetworkCase& net = input.pc.network;
    report.schedules.resize(net.generators.size());
    for (std::size_t k = 0; k < agents.size(); ++k) {
        const AgentOutput& o = agents[k]->output();
        const Region& view = input.pc.regions[k];
        report.upper_bound += o.own_bound;
        report.inner_cap_hits += o.inner_cap_hits;
        report.repairs += o.repairs;
        report.solutions[view.id] = o.solution;
        RegionProblem rp = make_region_problem(input.pc, view.id, input.grid, input.demand, input.omega);
        report.max_nodal_residual = std::max(report.max_nodal_residual, nodal_residual(rp, o.solution));
        for (std::size_t i = 0; i < view.generators.size(); ++i) {
            GeneratorSchedule& s = report.schedules[view.generators[i]];
            s.id = net.generators[view.generators[i]].id;
            s.region = view.id;
            s.x = o.solution.x[i];
            s.y = o.solution.y[i];
            s.z = o.solution.z[i];
            int count = 0;
            for (int v : s.z) count += v;
            report.cardinality = report.cardinality && count == 1;
        }
        report.metrics.insert(report.metrics.end(), o.metrics.begin(), o.metrics.end());
    }
    std::sort(report.metrics.begin(), report.metrics.end(), [](const RoundMetric& a, const RoundMetric& b) {
        return std::make_tuple(phase_order(a.phase), a.round, a.region) <
               std::make_tuple(phase_order(b.phase), b.round, b.region);
    });
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

RunReport centralized_benchmark(const RunInput& input, const RunOptions& options) {
    RunInput single = input;
    single.pc = single_region(input.pc.network);
    return run_algorithm(single, options);
}

}  // namespace cbmuc

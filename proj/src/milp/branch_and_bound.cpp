#include <cmath>
#include <memory>
#include <queue>

#include "cbmuc/milp.hpp"
#include "simplex.hpp"

namespace cbmuc::milp {

namespace {

struct Node {
    double bound = 0.0;
    int depth = 0;
    std::int64_t id = 0;
    std::vector<std::pair<double, double>> int_bounds;  // per integer column
    std::shared_ptr<const detail::Basis> basis;
    std::vector<double> x;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

}  // namespace

SolveResult solve_lp(const LinearModel& model, const Tolerances& tol, const Limits& limits) {
    model.validate();
    detail::BoundedSimplex lp(model, tol, limits);
    SolveResult res;
    res.status = lp.solve();
    res.iterations = lp.iterations();
    if (res.status == Status::Optimal) {
        res.values = lp.structural_values();
        res.objective = lp.objective() + model.objective_offset();
        res.best_bound = res.objective;
    }
    return res;
}

SolveResult solve_milp(const LinearModel& model, const Tolerances& tol, const Limits& limits) {
    model.validate();
    std::vector<int> ints;
    for (int j = 0; j < model.num_columns(); ++j)
        if (model.column(j).integer) ints.push_back(j);

    detail::BoundedSimplex lp(model, tol, limits);
    SolveResult res;
    for (int j : ints) {
        // integer columns get integral bounds up front
        double lo = std::ceil(model.column(j).lower - tol.integrality);
        double hi = std::floor(model.column(j).upper + tol.integrality);
        if (lo > hi) {
            res.status = Status::Infeasible;
            return res;
        }
        lp.set_structural_bounds(j, lo, hi);
    }
    Status root = lp.solve();
    res.nodes = 1;
    res.iterations = lp.iterations();
    if (root != Status::Optimal) {
        res.status = root;
        return res;
    }

    const double offset = model.objective_offset();
    double incumbent = kInf;
    std::vector<double> best_x;

    auto fractional_index = [&](const std::vector<double>& x) {
        int pick = -1;
        double best = -1.0;
        for (std::size_t k = 0; k < ints.size(); ++k) {
            double v = x[ints[k]];
            double f = v - std::floor(v);
            double score = std::min(f, 1.0 - f);
            if (score <= tol.integrality) continue;
            if (score > best) {
                best = score;
                pick = static_cast<int>(k);
            }
        }
        return pick;
    };
    auto closed = [&](double bound) {
        if (incumbent == kInf) return false;
        return incumbent - bound <= limits.relative_gap * std::max(1.0, std::abs(incumbent));
    };

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::int64_t next_id = 0;
    {
        Node n;
        n.bound = lp.objective() + offset;
        n.id = next_id++;
        for (int j : ints) n.int_bounds.emplace_back(lp.structural_lower(j), lp.structural_upper(j));
        n.basis = std::make_shared<detail::Basis>(lp.basis());
        n.x = lp.structural_values();
        if (fractional_index(n.x) < 0) {
            incumbent = n.bound;
            best_x = n.x;
        } else {
            open.push(std::move(n));
        }
    }

    bool node_limit = false;
    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (closed(node.bound)) continue;
        if (res.nodes >= limits.node_limit) {
            node_limit = true;
            open.push(std::move(node));
            break;
        }
        int k = fractional_index(node.x);
        int col = ints[k];
        double v = node.x[col];
        for (int side = 0; side < 2; ++side) {
            Node child;
            child.depth = node.depth + 1;
            child.id = next_id++;
            child.int_bounds = node.int_bounds;
            if (side == 0)
                child.int_bounds[k].second = std::floor(v);
            else
                child.int_bounds[k].first = std::ceil(v);
            if (child.int_bounds[k].first > child.int_bounds[k].second) continue;
            for (std::size_t q = 0; q < ints.size(); ++q)
                lp.set_structural_bounds(ints[q], child.int_bounds[q].first,
                                         child.int_bounds[q].second);
            Status st = lp.reoptimize(*node.basis);
            ++res.nodes;
            if (st != Status::Optimal) continue;
            child.bound = lp.objective() + offset;
            if (closed(child.bound)) continue;
            child.x = lp.structural_values();
            if (fractional_index(child.x) < 0) {
                incumbent = child.bound;
                best_x = std::move(child.x);
                continue;
            }
            child.basis = std::make_shared<detail::Basis>(lp.basis());
            open.push(std::move(child));
        }
    }
    res.iterations = lp.iterations();

    double bound = incumbent;
    if (!open.empty()) bound = std::min(bound, open.top().bound);
    res.best_bound = bound;
    if (best_x.empty()) {
        res.status = node_limit ? Status::NodeLimit : Status::Infeasible;
        return res;
    }
    res.status = node_limit ? Status::NodeLimit : Status::Optimal;
    res.objective = incumbent;
    res.values = std::move(best_x);
    return res;
}

}  // namespace cbmuc::milp

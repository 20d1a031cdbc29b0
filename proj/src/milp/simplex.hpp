#pragma once

#include <cstdint>
#include <vector>

#include "cbmuc/milp.hpp"

namespace cbmuc::milp::detail {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

struct Basis {
    std::vector<int> head;           // basic variable per row
    std::vector<VarState> state;     // per variable (structural + logical + artificial)
};

/// Bounded simplex over `A x - s = 0` where `s` are row logicals bounded by
/// the row sense. Phase 1 uses artificial columns which stay fixed at zero
/// afterwards so that a basis can be reused across bound changes.
class BoundedSimplex {
public:
    BoundedSimplex(const LinearModel& model, const Tolerances& tol, const Limits& limits);

    void set_structural_bounds(int j, double lower, double upper);
    double structural_lower(int j) const { return lower_[j]; }
    double structural_upper(int j) const { return upper_[j]; }

    /// Cold solve: crash basis, phase 1, phase 2.
    Status solve();
    /// Warm solve from a previously optimal basis after bound changes
    /// (dual simplex; falls back to a cold solve on trouble).
    Status reoptimize(const Basis& basis);

    Basis basis() const;
    double objective() const;
    std::vector<double> structural_values() const;
    std::int64_t iterations() const { return iterations_; }

private:
    enum class Outcome { Optimal, Unbounded, Infeasible, Limit, Numerical };

    void build_columns(const LinearModel& model);
    void crash();
    bool refactor();
    void recompute_basic_values();
    void compute_duals(const std::vector<double>& cost, std::vector<double>& y) const;
    double reduced_cost(int j, const std::vector<double>& cost,
                        const std::vector<double>& y) const;
    void ftran(int j, std::vector<double>& alpha) const;
    void pivot(int row, int entering, const std::vector<double>& alpha);
    Outcome primal(const std::vector<double>& cost);
    Outcome dual(const std::vector<double>& cost);
    bool nonbasic_dual_feasible(const std::vector<double>& cost);
    void place_nonbasic(int j);
    double max_primal_infeasibility() const;
    bool is_fixed(int j) const { return upper_[j] - lower_[j] <= 0.0; }

    Tolerances tol_;
    Limits limits_;
    int m_ = 0;         // rows
    int n_ = 0;         // structurals
    int total_ = 0;     // structurals + logicals + artificials

    // column-compressed storage of every column
    std::vector<int> col_start_;
    std::vector<int> row_index_;
    std::vector<double> value_;

    std::vector<double> lower_, upper_;
    std::vector<double> cost_;       // phase-2 cost
    std::vector<double> x_;
    std::vector<VarState> state_;
    std::vector<int> head_;
    std::vector<double> binv_;       // row-major m x m
    int pivots_since_refactor_ = 0;
    std::int64_t iterations_ = 0;
};

}  // namespace cbmuc::milp::detail

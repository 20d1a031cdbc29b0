#pragma once

// Self-contained LP / MILP solver: bounded primal and dual simplex over a dense
// explicit basis inverse, plus best-bound branch-and-bound on integer columns.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cbmuc::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Column {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double cost = 0.0;
    bool integer = false;
};

struct Row {
    std::string name;
    std::vector<int> cols;
    std::vector<double> coefs;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Minimization model `min c'x + offset  s.t.  rows, lower <= x <= upper`.
class LinearModel {
public:
    int add_column(std::string name, double lower, double upper, double cost,
                   bool integer = false);
    int add_row(std::string name, const std::vector<std::pair<int, double>>& terms,
                Sense sense, double rhs);

    int num_columns() const { return static_cast<int>(columns_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }

    const std::vector<Column>& columns() const { return columns_; }
    const std::vector<Row>& rows() const { return rows_; }
    Column& column(int j) { return columns_.at(j); }
    const Column& column(int j) const { return columns_.at(j); }
    const Row& row(int i) const { return rows_.at(i); }

    double objective_offset() const { return offset_; }
    void set_objective_offset(double v) { offset_ = v; }
    void add_objective_offset(double v) { offset_ += v; }

    /// Index of a column by name, -1 when absent. Linear scan.
    int find_column(const std::string& name) const;

    /// Objective value of an assignment (including the constant offset).
    double evaluate(const std::vector<double>& x) const;
    /// Largest bound or row violation of an assignment.
    double max_violation(const std::vector<double>& x) const;

    /// Throws ModelError on NaN coefficients, infinite rhs or crossed bounds.
    void validate() const;

    bool has_integers() const;

private:
    std::vector<Column> columns_;
    std::vector<Row> rows_;
    double offset_ = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

const char* to_string(Status s);

struct Tolerances {
    double feasibility = 1e-7;
    double optimality = 1e-7;
    double integrality = 1e-6;
    double pivot = 1e-9;
};

struct Limits {
    std::int64_t iteration_limit = 200000;  // per LP solve
    std::int64_t node_limit = 200000;
    double relative_gap = 1e-6;
    int refactor_interval = 64;
    int bland_threshold = 50;  // consecutive degenerate pivots before Bland's rule
};

struct SolveResult {
    Status status = Status::Infeasible;
    double objective = 0.0;
    double best_bound = -kInf;
    std::vector<double> values;
    std::int64_t nodes = 0;
    std::int64_t iterations = 0;

    bool has_solution() const { return !values.empty(); }
};

/// Solves the continuous relaxation (integrality marks ignored).
SolveResult solve_lp(const LinearModel& model, const Tolerances& tol = {},
                     const Limits& limits = {});

/// Best-bound branch-and-bound. Children warm-start from the parent basis.
SolveResult solve_milp(const LinearModel& model, const Tolerances& tol = {},
                       const Limits& limits = {});

/// CPLEX-LP text interchange.
void write_lp_format(std::ostream& out, const LinearModel& model);
LinearModel read_lp_format(std::istream& in);

}  // namespace cbmuc::milp

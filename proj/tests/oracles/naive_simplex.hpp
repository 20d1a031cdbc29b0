#pragma once

// Test-only oracle: textbook two-phase dense tableau simplex with Bland's rule
// for `min c'x  s.t.  rows, x >= 0`. Deliberately shares no code with the
// library solver.

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

enum class TableauStatus { Optimal, Infeasible, Unbounded };

struct TableauRow {
    std::vector<double> a;
    int sense;  // -1: <=, 0: =, +1: >=
    double b;
};

struct TableauResult {
    TableauStatus status;
    double objective = 0.0;
    std::vector<double> x;
};

inline TableauResult naive_simplex(const std::vector<double>& c, std::vector<TableauRow> rows) {
    const double eps = 1e-10;
    const int n = static_cast<int>(c.size());
    const int m = static_cast<int>(rows.size());
    for (auto& r : rows) {
        if (r.b < 0) {
            for (double& v : r.a) v = -v;
            r.b = -r.b;
            r.sense = -r.sense;
        }
    }
    int n_slack = 0, n_art = 0;
    for (auto& r : rows) {
        if (r.sense != 0) ++n_slack;
        if (r.sense >= 0) ++n_art;
    }
    const int cols = n + n_slack + n_art;
    // tableau rows 0..m-1 constraints, last column rhs
    std::vector<std::vector<double>> t(m, std::vector<double>(cols + 1, 0.0));
    std::vector<int> basis(m);
    int s = n, a = n + n_slack;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) t[i][j] = rows[i].a[j];
        t[i][cols] = rows[i].b;
        if (rows[i].sense == -1) {
            t[i][s] = 1.0;
            basis[i] = s++;
        } else {
            if (rows[i].sense == 1) t[i][s++] = -1.0;
            t[i][a] = 1.0;
            basis[i] = a++;
        }
    }
    auto run = [&](const std::vector<double>& cost, int limit_cols) -> TableauStatus {
        for (int iter = 0; iter < 100000; ++iter) {
            int enter = -1;
            for (int j = 0; j < limit_cols; ++j) {
                double d = cost[j];
                for (int i = 0; i < m; ++i) d -= cost[basis[i]] * t[i][j];
                bool basic = false;
                for (int i = 0; i < m; ++i) basic = basic || basis[i] == j;
                if (!basic && d < -1e-9) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return TableauStatus::Optimal;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (t[i][enter] > eps) {
                    double ratio = t[i][cols] / t[i][enter];
                    if (ratio < best - 1e-12 ||
                        (ratio <= best + 1e-12 && leave >= 0 && basis[i] < basis[leave])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return TableauStatus::Unbounded;
            double p = t[leave][enter];
            for (double& v : t[leave]) v /= p;
            for (int i = 0; i < m; ++i) {
                if (i == leave) continue;
                double f = t[i][enter];
                if (f == 0.0) continue;
                for (int j = 0; j <= cols; ++j) t[i][j] -= f * t[leave][j];
            }
            basis[leave] = enter;
        }
        return TableauStatus::Unbounded;
    };

    std::vector<double> phase1(cols, 0.0);
    for (int j = n + n_slack; j < cols; ++j) phase1[j] = 1.0;
    run(phase1, cols);
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n + n_slack) infeas += t[i][cols];
    if (infeas > 1e-7) return {TableauStatus::Infeasible};
    // drive remaining artificials out of the basis
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n + n_slack) continue;
        for (int j = 0; j < n + n_slack; ++j) {
            if (std::abs(t[i][j]) > 1e-9) {
                double p = t[i][j];
                for (double& v : t[i]) v /= p;
                for (int k = 0; k < m; ++k) {
                    if (k == i) continue;
                    double f = t[k][j];
                    if (f == 0.0) continue;
                    for (int q = 0; q <= cols; ++q) t[k][q] -= f * t[i][q];
                }
                basis[i] = j;
                break;
            }
        }
    }
    std::vector<double> phase2(cols, 0.0);
    for (int j = 0; j < n; ++j) phase2[j] = c[j];
    TableauStatus st = run(phase2, n + n_slack);
    if (st != TableauStatus::Optimal) return {st};
    TableauResult res{TableauStatus::Optimal};
    res.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) res.x[basis[i]] = t[i][cols];
    for (int j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
    return res;
}

}  // namespace oracle
